#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace saac {

using Money = double;
using Ticks = std::int64_t;
using Rng = std::mt19937_64;

// Bitmask over items; bit j set means item j belongs to the set.
using ItemSet = std::uint32_t;

inline constexpr int kMaxItems = 20;
inline constexpr int kMaxBidders = 32;
inline constexpr int kAuctioneer = -1;

// Slack used when comparing monetary sums that were built from ticks × epsilon.
inline constexpr Money kMoneyTolerance = 1e-9;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AuctionConfig {
  int n_bidders = 2;
  int m_items = 1;
  Money epsilon = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (n_bidders < 2) throw ConfigError("auction needs at least 2 bidders");
    if (n_bidders > kMaxBidders) throw ConfigError("too many bidders (max 32)");
    if (m_items < 1) throw ConfigError("auction needs at least 1 item");
    if (m_items > kMaxItems) throw ConfigError("too many items (max 20)");
    if (!(epsilon > 0.0)) throw ConfigError("bid increment must be positive");
  }

  Money to_money(Ticks t) const { return static_cast<Money>(t) * epsilon; }
  ItemSet all_items() const { return (ItemSet{1} << m_items) - 1; }
};

inline int item_count(ItemSet s) { return std::popcount(s); }
inline bool contains(ItemSet s, int item) { return (s >> item) & 1U; }
inline ItemSet singleton(int item) { return ItemSet{1} << item; }

// Definition-1 tie order: smaller sets first, then lexicographically smaller
// sorted index lists. For equal sizes the list holding the lowest element of
// the symmetric difference is the lexicographically smaller one.
inline bool tie_order_less(ItemSet a, ItemSet b) {
  const int ca = item_count(a), cb = item_count(b);
  if (ca != cb) return ca < cb;
  const ItemSet diff = a ^ b;
  if (diff == 0) return false;
  return (a & (diff & (~diff + 1))) != 0;
}

inline std::vector<int> to_items(ItemSet s) {
  std::vector<int> out;
  for (int j = 0; s != 0; ++j, s >>= 1)
    if (s & 1U) out.push_back(j);
  return out;
}

inline ItemSet from_items(const std::vector<int>& items) {
  ItemSet s = 0;
  for (int j : items) {
    if (j < 0 || j >= kMaxItems) throw ConfigError("item index out of range: " + std::to_string(j));
    s |= singleton(j);
  }
  return s;
}

inline std::string format_items(ItemSet s) {
  std::string out = "{";
  bool first = true;
  for (int j : to_items(s)) {
    if (!first) out += ",";
    out += std::to_string(j);
    first = false;
  }
  return out + "}";
}

}  // namespace saac
