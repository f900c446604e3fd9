#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "saac/rng.hpp"
#include "saac/types.hpp"
#include "saac/valuations.hpp"

namespace saac {

enum class Violation { kBudget, kEligibility, kAlreadyWinning, kUnknownItem };

inline std::string_view violation_code(Violation v) {
  switch (v) {
    case Violation::kBudget: return "BUDGET";
    case Violation::kEligibility: return "ELIGIBILITY";
    case Violation::kAlreadyWinning: return "ALREADY_WINNING";
    case Violation::kUnknownItem: return "UNKNOWN_ITEM";
  }
  return "UNKNOWN";
}

class IllegalBid : public std::runtime_error {
 public:
  IllegalBid(int bidder, Violation violation, ItemSet bid)
      : std::runtime_error("bidder " + std::to_string(bidder) + " submitted illegal bid " + format_items(bid) +
                           " (" + std::string(violation_code(violation)) + ")"),
        bidder_(bidder),
        violation_(violation) {}

  int bidder() const { return bidder_; }
  Violation violation() const { return violation_; }

 private:
  int bidder_;
  Violation violation_;
};

class TerminalStateError : public std::logic_error {
 public:
  TerminalStateError() : std::logic_error("auction is closed; no further rounds accepted") {}
};

struct AuctionState {
  AuctionConfig config;
  int round = 0;
  std::vector<Ticks> prices;
  std::vector<int> winner;  // kAuctioneer or a bidder index
  std::vector<int> eligibility;
  bool terminal = false;

  static AuctionState initial(const AuctionConfig& config) {
    config.validate();
    AuctionState s;
    s.config = config;
    s.prices.assign(config.m_items, 0);
    s.winner.assign(config.m_items, kAuctioneer);
    s.eligibility.assign(config.n_bidders, config.m_items);
    return s;
  }

  ItemSet won_by(int bidder) const {
    ItemSet s = 0;
    for (int j = 0; j < config.m_items; ++j)
      if (winner[j] == bidder) s |= singleton(j);
    return s;
  }

  Money price(int item) const { return config.to_money(prices[item]); }

  Money price_sum(ItemSet items) const {
    Ticks t = 0;
    for (int j = 0; j < config.m_items; ++j)
      if (contains(items, j)) t += prices[j];
    return config.to_money(t);
  }

  // Public features only; the round counter and config do not distinguish positions.
  bool same_position(const AuctionState& o) const {
    return prices == o.prices && winner == o.winner && eligibility == o.eligibility && terminal == o.terminal;
  }
};

// Legality of one bidder's raise: not on items it already holds, within
// eligibility, and affordable at P_j + epsilon on top of what it already owes.
// Empty bids are always legal.
inline std::optional<Violation> check_bid(const AuctionState& state, int bidder, const BidderProfile& profile,
                                          ItemSet bid) {
  if (bid == 0) return std::nullopt;
  if ((bid & ~state.config.all_items()) != 0) return Violation::kUnknownItem;
  const ItemSet won = state.won_by(bidder);
  if ((bid & won) != 0) return Violation::kAlreadyWinning;
  if (item_count(bid) + item_count(won) > state.eligibility[bidder]) return Violation::kEligibility;
  const Ticks raise_ticks = [&] {
    Ticks t = 0;
    for (int j = 0; j < state.config.m_items; ++j)
      if (contains(bid, j)) t += state.prices[j] + 1;
    return t;
  }();
  const Money cost = state.config.to_money(raise_ticks);
  if (cost > profile.budget - state.price_sum(won) + kMoneyTolerance) return Violation::kBudget;
  return std::nullopt;
}

// Every legal raise for `bidder`, in increasing bitmask order. The empty set
// is always first.
inline std::vector<ItemSet> legal_bids(const AuctionState& state, int bidder, const BidderProfile& profile) {
  if (state.terminal) throw TerminalStateError();
  if (bidder < 0 || bidder >= state.config.n_bidders) throw std::out_of_range("bidder index out of range");
  if (state.config.m_items > kMaxItems) throw ConfigError("legal_bids supports at most 20 items");
  const ItemSet free_items = state.config.all_items() & ~state.won_by(bidder);
  std::vector<ItemSet> out;
  // Enumerate submasks of free_items in increasing order.
  ItemSet x = 0;
  do {
    if (!check_bid(state, bidder, profile, x)) out.push_back(x);
    x = (x - free_items) & free_items;
  } while (x != 0);
  return out;
}

namespace detail {

// Resolves one round without legality checks. `choose(item, candidates, count)`
// returns the index into candidates of the new temporary winner.
template <class Chooser>
void resolve_round(AuctionState& state, std::span<const ItemSet> bids, Chooser&& choose) {
  const int n = state.config.n_bidders;
  const int m = state.config.m_items;
  bool any_bid = false;
  for (int i = 0; i < n; ++i) any_bid |= bids[i] != 0;
  ++state.round;
  if (!any_bid) {
    state.terminal = true;
    return;
  }
  std::array<int, kMaxBidders> held{};
  for (int j = 0; j < m; ++j)
    if (state.winner[j] != kAuctioneer) ++held[state.winner[j]];
  for (int i = 0; i < n; ++i) state.eligibility[i] = held[i] + item_count(bids[i]);

  std::array<int, kMaxBidders> candidates{};
  for (int j = 0; j < m; ++j) {
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (contains(bids[i], j)) candidates[count++] = i;
    if (count == 0) continue;
    state.prices[j] += 1;
    state.winner[j] = count == 1 ? candidates[0] : candidates[choose(j, candidates.data(), count)];
  }
}

}  // namespace detail

// Throws IllegalBid naming the first offending bidder.
inline void validate_joint_bid(const AuctionState& state, std::span<const ItemSet> bids,
                               std::span<const BidderProfile> profiles) {
  if (state.terminal) throw TerminalStateError();
  if (static_cast<int>(bids.size()) != state.config.n_bidders)
    throw std::invalid_argument("joint bid must hold one action per bidder");
  for (int i = 0; i < state.config.n_bidders; ++i)
    if (auto v = check_bid(state, i, profiles[i], bids[i])) throw IllegalBid(i, *v, bids[i]);
}

// Simultaneous round: every item receiving bids goes up one tick and its
// temporary winner is drawn uniformly among this round's bidders on it.
inline AuctionState apply_round(const AuctionState& state, std::span<const ItemSet> bids,
                                std::span<const BidderProfile> profiles, Rng& rng) {
  validate_joint_bid(state, bids, profiles);
  AuctionState next = state;
  detail::resolve_round(next, bids, [&](int, const int*, int count) { return uniform_index(rng, count); });
  return next;
}

inline Money utility(const ValueFunction& values, ItemSet won, std::span<const Ticks> closing_prices,
                     Money epsilon) {
  Ticks paid = 0;
  for (int j = 0; j < values.m_items(); ++j)
    if (contains(won, j)) paid += closing_prices[j];
  return values(won) - static_cast<Money>(paid) * epsilon;
}

inline Money risk_averse_utility(Money u, double alpha) { return u < 0.0 ? (1.0 + alpha) * u : u; }

struct Outcome {
  std::vector<Ticks> closing_prices;
  std::vector<int> final_allocation;
  std::vector<Money> utilities;
  int rounds_played = 0;

  ItemSet won_by(int bidder) const {
    ItemSet s = 0;
    for (std::size_t j = 0; j < final_allocation.size(); ++j)
      if (final_allocation[j] == bidder) s |= singleton(static_cast<int>(j));
    return s;
  }
};

inline Outcome make_outcome(const AuctionState& state, std::span<const BidderProfile> profiles) {
  Outcome out;
  out.closing_prices = state.prices;
  out.final_allocation = state.winner;
  out.rounds_played = state.round;
  for (int i = 0; i < state.config.n_bidders; ++i)
    out.utilities.push_back(utility(profiles[i].values, state.won_by(i), state.prices, state.config.epsilon));
  return out;
}

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual ItemSet bid(const AuctionState& state, int bidder, std::span<const BidderProfile> profiles, Rng& rng) = 0;
};

struct RoundRecord {
  int round = 0;
  std::vector<Ticks> prices;
  std::vector<int> winners;
  std::vector<int> eligibility;
  std::vector<ItemSet> bids;

  bool operator==(const RoundRecord&) const = default;
};

inline RoundRecord make_record(const AuctionState& after, std::span<const ItemSet> bids) {
  return {after.round, after.prices, after.winner, after.eligibility, {bids.begin(), bids.end()}};
}

// Each non-final round commits at least one more tick of some bidder's budget,
// so the auction ends within sum_i floor(b_i / epsilon) + 1 rounds.
inline long round_bound(const AuctionConfig& config, std::span<const BidderProfile> profiles) {
  long bound = 1;
  for (const auto& p : profiles) bound += static_cast<long>(std::floor(p.budget / config.epsilon + kMoneyTolerance));
  return bound;
}

inline Outcome play_out(const AuctionConfig& config, std::span<const BidderProfile> profiles,
                        std::span<Strategy* const> strategies, Rng& rng, std::vector<RoundRecord>* trace = nullptr) {
  config.validate();
  if (static_cast<int>(strategies.size()) != config.n_bidders)
    throw ConfigError("play_out: need one strategy per bidder");
  if (static_cast<int>(profiles.size()) != config.n_bidders) throw ConfigError("play_out: need one profile per bidder");
  const long bound = round_bound(config, profiles);
  AuctionState state = AuctionState::initial(config);
  std::vector<ItemSet> bids(config.n_bidders);
  while (!state.terminal) {
    if (state.round >= bound) throw std::logic_error("auction exceeded its round bound");
    for (int i = 0; i < config.n_bidders; ++i) bids[i] = strategies[i]->bid(state, i, profiles, rng);
    state = apply_round(state, bids, profiles, rng);
    if (trace) trace->push_back(make_record(state, bids));
  }
  return make_outcome(state, profiles);
}

}  // namespace saac
