#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "saac/auction.hpp"

namespace saac {

// Per-item predicted closing prices in money units.
using PricePrediction = std::vector<Money>;

inline constexpr Money kUtilityTieTolerance = 1e-9;

// Current-price-aware prediction: items already held keep max(p_init, P_j),
// every other item is predicted at max(p_init, P_j + epsilon).
inline PricePrediction rho(std::span<const Money> p_init, std::span<const Ticks> prices, ItemSet won, Money epsilon) {
  PricePrediction out(prices.size());
  for (std::size_t j = 0; j < prices.size(); ++j) {
    const Money current = static_cast<Money>(prices[j]) * epsilon;
    out[j] = contains(won, static_cast<int>(j)) ? std::max(p_init[j], current) : std::max(p_init[j], current + epsilon);
  }
  return out;
}

// One bidder's view of the bundle problem at a decision point.
struct BundleProblem {
  const ValueFunction* values = nullptr;
  Money budget = 0.0;
  ItemSet held = 0;         // Y: items temporarily won
  ItemSet biddable = 0;     // items the bidder may raise on
  int eligibility = 0;
  std::span<const Money> predicted;      // rho, one entry per item
  std::span<const Money> raise_cost;     // P_j + epsilon per item (actual legality)
  Money held_cost = 0.0;                 // sum of P_j over held items
};

namespace detail {

// Scratch tables indexed by item bitmask, reused across calls on one thread.
struct BundleScratch {
  std::vector<Money> predicted_sum;
  std::vector<Money> raise_sum;
};

inline BundleScratch& bundle_scratch(int m) {
  thread_local BundleScratch scratch;
  const std::size_t size = std::size_t{1} << m;
  if (scratch.predicted_sum.size() < size) {
    scratch.predicted_sum.resize(size);
    scratch.raise_sum.resize(size);
  }
  return scratch;
}

}  // namespace detail

// Calls fn(X, predicted utility of X ∪ Y) for every non-empty X ⊆ biddable
// with |X| + |Y| ≤ eligibility, predicted cost of X ∪ Y within budget and an
// actual raise that is legal.
template <class Fn>
void for_each_feasible_bundle(const BundleProblem& pb, Fn&& fn) {
  const int m = pb.values->m_items();
  auto& scratch = detail::bundle_scratch(m);
  Money held_predicted = 0.0;
  for (int j = 0; j < m; ++j)
    if (contains(pb.held, j)) held_predicted += pb.predicted[j];
  const int room = pb.eligibility - item_count(pb.held);
  if (room <= 0) return;
  scratch.predicted_sum[0] = held_predicted;
  scratch.raise_sum[0] = 0.0;
  const ItemSet free = pb.biddable;
  for (ItemSet x = free & (~free + 1); x != 0; x = (x - free) & free) {
    const ItemSet rest = x & (x - 1);
    const int low = std::countr_zero(x);
    scratch.predicted_sum[x] = scratch.predicted_sum[rest] + pb.predicted[low];
    scratch.raise_sum[x] = scratch.raise_sum[rest] + pb.raise_cost[low];
    if (item_count(x) > room) continue;
    if (scratch.predicted_sum[x] > pb.budget + kMoneyTolerance) continue;
    if (scratch.raise_sum[x] > pb.budget - pb.held_cost + kMoneyTolerance) continue;
    fn(x, (*pb.values)(x | pb.held) - scratch.predicted_sum[x]);
  }
}

struct BundleChoice {
  ItemSet raise = 0;
  Money predicted_utility = 0.0;
};

// True when candidate (x, u) beats incumbent (best, best_u) under: higher
// utility, then smaller raise, then lexicographically smaller item list.
inline bool better_bundle(ItemSet x, Money u, ItemSet best, Money best_u) {
  if (u > best_u + kUtilityTieTolerance) return true;
  if (u < best_u - kUtilityTieTolerance) return false;
  return tie_order_less(x, best);
}

inline BundleChoice best_bundle(const BundleProblem& pb) {
  Money held_predicted = 0.0;
  for (int j = 0; j < pb.values->m_items(); ++j)
    if (contains(pb.held, j)) held_predicted += pb.predicted[j];
  // Passing keeps Y; it is always available.
  BundleChoice best{0, (*pb.values)(pb.held) - held_predicted};
  for_each_feasible_bundle(pb, [&](ItemSet x, Money u) {
    if (better_bundle(x, u, best.raise, best.predicted_utility)) best = {x, u};
  });
  return best;
}

// A bidder's bundle problem at the current state, without heap allocation.
struct BidderView {
  std::array<Money, kMaxItems> predicted{};
  std::array<Money, kMaxItems> raise_cost{};
  BundleProblem problem;

  BidderView(std::span<const Money> p_init, const AuctionState& state, int bidder, const BidderProfile& profile) {
    const int m = state.config.m_items;
    const Money eps = state.config.epsilon;
    ItemSet held = 0;
    Money held_cost = 0.0;
    for (int j = 0; j < m; ++j) {
      const Money current = static_cast<Money>(state.prices[j]) * eps;
      raise_cost[j] = static_cast<Money>(state.prices[j] + 1) * eps;
      if (state.winner[j] == bidder) {
        held |= singleton(j);
        held_cost += current;
        predicted[j] = std::max(p_init[j], current);
      } else {
        predicted[j] = std::max(p_init[j], current + eps);
      }
    }
    problem.values = &profile.values;
    problem.budget = profile.budget;
    problem.held = held;
    problem.biddable = state.config.all_items() & ~held;
    problem.eligibility = state.eligibility[bidder];
    problem.predicted = std::span<const Money>(predicted.data(), m);
    problem.raise_cost = std::span<const Money>(raise_cost.data(), m);
    problem.held_cost = held_cost;
  }

  BidderView(const BidderView&) = delete;
  BidderView& operator=(const BidderView&) = delete;
};

// Point-price-prediction bid under budget and eligibility constraints.
inline ItemSet pp_bid(std::span<const Money> p_init, const AuctionState& state, int bidder, const BidderProfile& profile) {
  if (state.terminal) throw TerminalStateError();
  BidderView view(p_init, state, bidder, profile);
  return best_bundle(view.problem).raise;
}

inline ItemSet sb_bid(const AuctionState& state, int bidder, const BidderProfile& profile) {
  const PricePrediction zero(state.config.m_items, 0.0);
  return pp_bid(zero, state, bidder, profile);
}

// Advances `state` with bidder i playing PP(predictions[i]) until the auction
// closes or `max_rounds` more rounds have been played (negative: no limit).
inline void play_pp_to_end(AuctionState& state, std::span<const BidderProfile> profiles,
                           std::span<const PricePrediction> predictions, Rng& rng, long max_rounds = -1) {
  const int n = state.config.n_bidders;
  std::array<ItemSet, kMaxBidders> bids{};
  for (long r = 0; !state.terminal && r != max_rounds; ++r) {
    for (int i = 0; i < n; ++i) {
      BidderView view(predictions[i], state, i, profiles[i]);
      bids[i] = best_bundle(view.problem).raise;
    }
    detail::resolve_round(state, std::span<const ItemSet>(bids.data(), n),
                          [&](int, const int*, int count) { return uniform_index(rng, count); });
  }
}

// Bundle demanded at fixed prices p from scratch (no holdings, eligibility m).
inline ItemSet demand_at(std::span<const Money> prices, const BidderProfile& profile, int m_items) {
  BundleProblem pb;
  pb.values = &profile.values;
  pb.budget = profile.budget;
  pb.held = 0;
  pb.biddable = (ItemSet{1} << m_items) - 1;
  pb.eligibility = m_items;
  pb.predicted = prices;
  pb.raise_cost = prices;
  return best_bundle(pb).raise;
}

// Expected-price-equilibrium style prediction by tatonnement against unit
// supply: p_j <- max(0, p_j + kappa (d_j(p) - 1)). The process ignores the bid
// increment entirely, which is a known limitation of this baseline.
inline PricePrediction epe_prediction(std::span<const BidderProfile> profiles, const AuctionConfig& config,
                                      double kappa, int iters) {
  if (!(kappa > 0.0)) throw ConfigError("epe: kappa must be positive");
  if (iters < 1) throw ConfigError("epe: iters must be >= 1");
  const int m = config.m_items;
  PricePrediction p(m, 0.0);
  std::vector<int> demand(m);
  for (int t = 0; t < iters; ++t) {
    std::fill(demand.begin(), demand.end(), 0);
    for (const auto& profile : profiles) {
      const ItemSet x = demand_at(p, profile, m);
      for (int j = 0; j < m; ++j) demand[j] += contains(x, j);
    }
    for (int j = 0; j < m; ++j) p[j] = std::max(0.0, p[j] + kappa * (demand[j] - 1));
  }
  return p;
}

class PointPriceStrategy : public Strategy {
 public:
  explicit PointPriceStrategy(PricePrediction prediction) : prediction_(std::move(prediction)) {}

  ItemSet bid(const AuctionState& state, int bidder, std::span<const BidderProfile> profiles, Rng&) override {
    return pp_bid(prediction_, state, bidder, profiles[bidder]);
  }

  const PricePrediction& prediction() const { return prediction_; }

 private:
  PricePrediction prediction_;
};

class PassStrategy : public Strategy {
 public:
  ItemSet bid(const AuctionState&, int, std::span<const BidderProfile>, Rng&) override { return 0; }
};

// Unit-demand play: when holding nothing, raise the cheapest affordable item
// (lowest index on equal prices) whose standalone value covers the raise.
class CheapestItemStrategy : public Strategy {
 public:
  ItemSet bid(const AuctionState& state, int bidder, std::span<const BidderProfile> profiles, Rng&) override {
    if (state.won_by(bidder) != 0) return 0;
    const auto& profile = profiles[bidder];
    int best = -1;
    for (int j = 0; j < state.config.m_items; ++j) {
      if (check_bid(state, bidder, profile, singleton(j))) continue;
      if (profile.values(singleton(j)) < state.config.to_money(state.prices[j] + 1)) continue;
      if (best < 0 || state.prices[j] < state.prices[best]) best = j;
    }
    return best < 0 ? 0 : singleton(best);
  }
};

}  // namespace saac
