#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "saac/rng.hpp"
#include "saac/types.hpp"

namespace saac {

// Exhaustive bundle valuation, indexed by item bitmask.
class ValueFunction {
 public:
  ValueFunction() = default;

  ValueFunction(int m_items, std::vector<Money> table) : m_items_(m_items), table_(std::move(table)) {
    if (m_items_ < 1 || m_items_ > kMaxItems) throw ConfigError("value function: item count out of range");
    if (table_.size() != (std::size_t{1} << m_items_))
      throw ConfigError("value function: table must hold 2^m entries");
    if (table_[0] != 0.0) throw ConfigError("value function: v(empty) must be 0");
    for (Money v : table_)
      if (!std::isfinite(v)) throw ConfigError("value function: non-finite entry");
  }

  static ValueFunction zero(int m_items) { return {m_items, std::vector<Money>(std::size_t{1} << m_items, 0.0)}; }

  // Additive valuation from per-item values.
  static ValueFunction additive(const std::vector<Money>& item_values) {
    const int m = static_cast<int>(item_values.size());
    std::vector<Money> table(std::size_t{1} << m, 0.0);
    for (ItemSet s = 1; s < table.size(); ++s) {
      const int low = std::countr_zero(s);
      table[s] = table[s & (s - 1)] + item_values[low];
    }
    return {m, std::move(table)};
  }

  int m_items() const { return m_items_; }
  Money operator()(ItemSet s) const { return table_[s]; }
  const std::vector<Money>& table() const { return table_; }

  bool operator==(const ValueFunction&) const = default;

 private:
  int m_items_ = 0;
  std::vector<Money> table_;
};

struct BidderProfile {
  Money budget = 0.0;
  ValueFunction values;

  bool operator==(const BidderProfile&) const = default;
};

struct Instance {
  AuctionConfig config;
  std::vector<BidderProfile> profiles;
};

struct GeneratorParams {
  Money v_cap = 5.0;
  Money b_min = 10.0;
  Money b_max = 40.0;
};

// First covering pair (X, X ∪ {j}) with v(X) > v(X ∪ {j}), if any. Checking
// covering pairs is enough: monotonicity along every edge of the lattice
// implies it for every chain.
inline std::optional<std::pair<ItemSet, ItemSet>> free_disposal_violation(const ValueFunction& v) {
  const ItemSet n = ItemSet{1} << v.m_items();
  for (ItemSet x = 0; x < n; ++x)
    for (int j = 0; j < v.m_items(); ++j) {
      if (contains(x, j)) continue;
      const ItemSet y = x | singleton(j);
      if (v(x) > v(y)) return std::pair{x, y};
    }
  return std::nullopt;
}

inline bool check_free_disposal(const ValueFunction& v) { return !free_disposal_violation(v).has_value(); }

// Random valuation of the generic setting: each bundle X is drawn from
// [L, V + v(X\{j*}) + v({j*})] where L = max_j v(X\{j}) and j* is the lowest
// maximizing index. Singletons draw from [0, V].
inline ValueFunction generate_value_function(int m_items, const GeneratorParams& params, Rng& rng) {
  if (m_items < 1 || m_items > kMaxItems) throw ConfigError("generator: item count out of range");
  const std::size_t n = std::size_t{1} << m_items;
  std::vector<ItemSet> order(n);
  std::iota(order.begin(), order.end(), ItemSet{0});
  std::stable_sort(order.begin(), order.end(),
                   [](ItemSet a, ItemSet b) { return item_count(a) < item_count(b); });

  std::vector<Money> table(n, 0.0);
  for (ItemSet x : order) {
    if (x == 0) continue;
    if (item_count(x) == 1) {
      table[x] = uniform_real(rng, 0.0, params.v_cap);
      continue;
    }
    Money lower = -1.0;
    int best_item = -1;
    for (int j = 0; j < m_items; ++j) {
      if (!contains(x, j)) continue;
      const Money sub = table[x & ~singleton(j)];
      if (sub > lower) {
        lower = sub;
        best_item = j;
      }
    }
    const Money upper = params.v_cap + lower + table[singleton(best_item)];
    table[x] = uniform_real(rng, lower, upper);
  }
  return {m_items, std::move(table)};
}

inline Instance generate_instance(int n_bidders, int m_items, Money epsilon, const GeneratorParams& params,
                                  std::uint64_t seed) {
  if (params.b_min > params.b_max) throw ConfigError("generator: b_min must not exceed b_max");
  if (params.v_cap < 0) throw ConfigError("generator: v_cap must be non-negative");
  Instance inst;
  inst.config = AuctionConfig{n_bidders, m_items, epsilon, seed};
  inst.config.validate();
  Rng rng = make_rng(seed);
  for (int i = 0; i < n_bidders; ++i) {
    BidderProfile p;
    // Budget first, then the valuation, from the same stream.
    p.budget = uniform_real(rng, params.b_min, params.b_max);
    p.values = generate_value_function(m_items, params, rng);
    inst.profiles.push_back(std::move(p));
  }
  return inst;
}

// Two items, two bidders, epsilon 1: bidder 0 treats the items as perfect
// substitutes worth 12, bidder 1 as perfect complements worth 20 together.
// A budget of 24 or more is effectively unlimited.
inline Instance example1_instance(Money budget_0 = 100.0, Money budget_1 = 100.0) {
  Instance inst;
  inst.config = AuctionConfig{2, 2, 1.0, 0};
  inst.profiles.push_back({budget_0, ValueFunction{2, {0.0, 12.0, 12.0, 12.0}}});
  inst.profiles.push_back({budget_1, ValueFunction{2, {0.0, 0.0, 0.0, 20.0}}});
  return inst;
}

}  // namespace saac
