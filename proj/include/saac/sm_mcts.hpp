#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "saac/auction.hpp"
#include "saac/rng.hpp"
#include "saac/strategies.hpp"

namespace saac {

struct SearchParams {
  double alpha = 7.0;
  int n_act = 20;
  int r_max = 10;
  std::chrono::milliseconds time_budget{0};  // 0: no wall-clock limit
  long max_iterations = 10000;               // 0: no iteration limit
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (alpha < 0.0) throw ConfigError("search: alpha must be non-negative");
    if (n_act < 1) throw ConfigError("search: n_act must be >= 1");
    if (r_max < 1) throw ConfigError("search: r_max must be >= 1");
    if (max_iterations < 0) throw ConfigError("search: max_iterations must be non-negative");
  }
};

// Per-action statistics of one player at one node.
struct ActionStats {
  double r_alpha = 0.0;  // cumulative risk-averse reward
  long n = 0;
  double a_alpha = std::numeric_limits<double>::infinity();   // min observed reward
  double c_alpha = -std::numeric_limits<double>::infinity();  // max observed reward

  void update(double reward) {
    r_alpha += reward;
    ++n;
    a_alpha = std::min(a_alpha, reward);
    c_alpha = std::max(c_alpha, reward);
  }

  double mean() const { return n == 0 ? 0.0 : r_alpha / static_cast<double>(n); }
};

// UCT index with an online estimate of the reward range, clamped below by the
// bid increment. Unvisited actions score +inf.
inline double selection_score(const ActionStats& s, long total_visits, double epsilon) {
  if (s.n == 0) return std::numeric_limits<double>::infinity();
  const double width = std::max(s.c_alpha - s.a_alpha, epsilon);
  const double nd = static_cast<double>(s.n);
  return s.r_alpha / nd + width * std::sqrt(2.0 * std::log(static_cast<double>(total_visits)) / nd);
}

class HashOverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

using Hash128 = unsigned __int128;

// Mixed-radix key over (price rise since the root, temporary winner) per item:
// digit_j = r_max * winner_j + (P_j - P0_j), base r_max * n. Auctioneer-held
// items contribute nothing. Exact while every rise stays below r_max.
inline Hash128 hash_prices_allocation(std::span<const Ticks> root_prices, std::span<const Ticks> prices,
                                      std::span<const int> allocation, int n_bidders, int r_max) {
  const Hash128 step = static_cast<Hash128>(r_max) * static_cast<Hash128>(n_bidders);
  Hash128 h = 0;
  Hash128 weight = 1;
  const std::size_t m = prices.size();
  for (std::size_t j = 0; j < m; ++j) {
    const Ticks rise = prices[j] - root_prices[j];
    if (rise < 0) throw std::invalid_argument("hash: price below root price");
    if (allocation[j] != kAuctioneer) {
      if (rise >= r_max) throw HashOverflowError("hash: price rise exceeds r_max");
      const Hash128 digit = static_cast<Hash128>(r_max) * static_cast<Hash128>(allocation[j]) + static_cast<Hash128>(rise);
      Hash128 term;
      if (__builtin_mul_overflow(digit, weight, &term) || __builtin_add_overflow(h, term, &h))
        throw HashOverflowError("hash: 128-bit range exceeded");
    }
    if (j + 1 < m && __builtin_mul_overflow(weight, step, &weight))
      throw HashOverflowError("hash: 128-bit range exceeded");
  }
  return h;
}

// Sum_i e_i (m + 1)^i.
inline std::uint64_t hash_eligibility(std::span<const int> eligibility, int m_items) {
  std::uint64_t h = 0;
  std::uint64_t weight = 1;
  const auto base = static_cast<std::uint64_t>(m_items) + 1;
  for (std::size_t i = 0; i < eligibility.size(); ++i) {
    const int e = eligibility[i];
    if (e < 0 || e > m_items) throw std::invalid_argument("hash: eligibility out of range");
    std::uint64_t term;
    if (__builtin_mul_overflow(static_cast<std::uint64_t>(e), weight, &term) || __builtin_add_overflow(h, term, &h))
      throw HashOverflowError("hash: eligibility key exceeds 64 bits");
    if (i + 1 < eligibility.size() && __builtin_mul_overflow(weight, base, &weight))
      throw HashOverflowError("hash: eligibility key exceeds 64 bits");
  }
  return h;
}

struct NodeKey {
  Hash128 h1 = 0;
  std::uint64_t h2 = 0;
  bool operator==(const NodeKey&) const = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const {
    const auto lo = static_cast<std::uint64_t>(k.h1);
    const auto hi = static_cast<std::uint64_t>(k.h1 >> 64);
    return static_cast<std::size_t>(splitmix64(lo ^ splitmix64(hi ^ splitmix64(k.h2))));
  }
};

inline NodeKey node_key(const AuctionState& root, const AuctionState& state, int r_max) {
  return {hash_prices_allocation(root.prices, state.prices, state.winner, state.config.n_bidders, r_max),
          hash_eligibility(state.eligibility, state.config.m_items)};
}

struct PlayerActions {
  std::vector<ItemSet> actions;  // actions[0] is always the pass
  std::vector<ActionStats> stats;

  long total_visits() const {
    long t = 0;
    for (const auto& s : stats) t += s.n;
    return t;
  }
};

struct TreeNode {
  NodeKey key;
  AuctionState state;
  int depth = 0;
  std::vector<PlayerActions> players;
};

// Unvisited actions first (lowest index), otherwise the highest selection
// score with ties to the lowest index.
inline int select_action(const PlayerActions& pa, double epsilon) {
  for (std::size_t k = 0; k < pa.stats.size(); ++k)
    if (pa.stats[k].n == 0) return static_cast<int>(k);
  const long total = pa.total_visits();
  int best = 0;
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pa.stats.size(); ++k) {
    const double q = selection_score(pa.stats[k], total, epsilon);
    if (q > best_q) {
      best_q = q;
      best = static_cast<int>(k);
    }
  }
  return best;
}

// Pass plus the n_act - 1 raises with the highest risk-averse predicted
// utility at rho(p_star, P, Y), ranked with the PP tie order.
inline std::vector<ItemSet> expansion_actions(const AuctionState& state, int bidder, const BidderProfile& profile,
                                              std::span<const Money> p_star, double alpha, int n_act) {
  std::vector<ItemSet> out{0};
  if (n_act <= 1 || state.terminal) return out;
  struct Candidate {
    ItemSet x;
    double score;
  };
  std::vector<Candidate> cands;
  BidderView view(p_star, state, bidder, profile);
  for_each_feasible_bundle(view.problem,
                           [&](ItemSet x, Money u) { cands.push_back({x, risk_averse_utility(u, alpha)}); });
  auto ranked_before = [](const Candidate& a, const Candidate& b) { return better_bundle(a.x, a.score, b.x, b.score); };
  const std::size_t keep = std::min(cands.size(), static_cast<std::size_t>(n_act - 1));
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), ranked_before);
  for (std::size_t k = 0; k < keep; ++k) out.push_back(cands[k].x);
  return out;
}

inline std::vector<double> terminal_rewards(const AuctionState& state, std::span<const BidderProfile> profiles,
                                            std::span<const double> alphas) {
  std::vector<double> out(state.config.n_bidders);
  for (int i = 0; i < state.config.n_bidders; ++i)
    out[i] = risk_averse_utility(
        utility(profiles[i].values, state.won_by(i), state.prices, state.config.epsilon), alphas[i]);
  return out;
}

// Noisy-PP playout: bidder i plays PP(max(0, p_star + eta_i)) with eta_i drawn
// uniformly from [-eps, eps]^m once per call.
inline std::vector<double> rollout(AuctionState state, std::span<const Money> p_star,
                                   std::span<const BidderProfile> profiles, std::span<const double> alphas, Rng& rng) {
  if (!state.terminal) {
    const int n = state.config.n_bidders;
    const int m = state.config.m_items;
    const Money eps = state.config.epsilon;
    std::vector<PricePrediction> noisy(n, PricePrediction(m));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) noisy[i][j] = std::max(0.0, p_star[j] + uniform_real(rng, -eps, eps));
    play_pp_to_end(state, profiles, noisy, rng);
  }
  return terminal_rewards(state, profiles, alphas);
}

struct RootActionRow {
  ItemSet action = 0;
  double mean = 0.0;
  long n = 0;
  double min = 0.0;
  double max = 0.0;
};

struct SearchResult {
  ItemSet action = 0;
  long iterations = 0;
  std::vector<RootActionRow> root_table;
  std::size_t tree_size = 0;
  int max_depth = 0;
  double elapsed_ms = 0.0;
};

// Decoupled simultaneous-move search over one auction position. The tree is
// a DAG: positions are merged through the transposition table, and a position
// is only stored while its depth stays below r_max (deeper leaves are rolled
// out without being added).
class SimultaneousSearch {
 public:
  SimultaneousSearch(const AuctionState& root, std::span<const BidderProfile> profiles, std::span<const Money> p_star,
                     const SearchParams& params)
      : profiles_(profiles.begin(), profiles.end()),
        p_star_(p_star.begin(), p_star.end()),
        params_(params),
        alphas_(root.config.n_bidders, params.alpha),
        root_state_(root),
        rng_(make_rng(params.rng_seed)) {
    params_.validate();
    if (root.terminal) throw TerminalStateError();
    if (static_cast<int>(p_star_.size()) != root.config.m_items)
      throw ConfigError("search: prediction length must equal item count");
    add_node(root, 0);
  }

  // One selection / expansion / rollout / backpropagation pass.
  void iterate() {
    path_.clear();
    std::size_t node = 0;
    std::vector<double> rewards;
    const int n = root_state_.config.n_bidders;
    std::array<ItemSet, kMaxBidders> bids{};
    for (;;) {
      std::vector<int> choice(n);
      for (int i = 0; i < n; ++i) {
        choice[i] = select_action(nodes_[node].players[i], root_state_.config.epsilon);
        bids[i] = nodes_[node].players[i].actions[choice[i]];
      }
      path_.push_back({node, std::move(choice)});
      AuctionState next = nodes_[node].state;
      detail::resolve_round(next, std::span<const ItemSet>(bids.data(), n),
                            [&](int, const int*, int count) { return uniform_index(rng_, count); });
      if (next.terminal) {
        rewards = terminal_rewards(next, profiles_, alphas_);
        break;
      }
      const int depth = nodes_[node].depth + 1;
      if (depth >= params_.r_max) {
        rewards = rollout(std::move(next), p_star_, profiles_, alphas_, rng_);
        break;
      }
      const NodeKey key = node_key(root_state_, next, params_.r_max);
      if (auto it = table_.find(key); it != table_.end()) {
        node = it->second;
        continue;
      }
      add_node(next, depth);
      rewards = rollout(std::move(next), p_star_, profiles_, alphas_, rng_);
      break;
    }
    for (const auto& step : path_)
      for (int i = 0; i < n; ++i) nodes_[step.node].players[i].stats[step.choice[i]].update(rewards[i]);
    ++iterations_;
  }

  SearchResult run(int player) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const bool timed = params_.time_budget.count() > 0;
    const bool counted = params_.max_iterations > 0;
    if (timed || counted) {
      // A forced pass needs no search.
      if (nodes_[0].players[player].actions.size() > 1) {
        while (true) {
          if (counted && iterations_ >= params_.max_iterations) break;
          if (timed && clock::now() - start >= params_.time_budget) break;
          iterate();
        }
      }
    }
    SearchResult out = result(player);
    out.elapsed_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    return out;
  }

  // Final move: highest mean risk-averse reward among visited root actions,
  // ties to the lowest index; the pass if nothing was visited.
  SearchResult result(int player) const {
    SearchResult out;
    const auto& pa = nodes_[0].players[player];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pa.actions.size(); ++k) {
      const auto& s = pa.stats[k];
      out.root_table.push_back({pa.actions[k], s.mean(), s.n, s.n ? s.a_alpha : 0.0, s.n ? s.c_alpha : 0.0});
      if (s.n > 0 && s.mean() > best) {
        best = s.mean();
        out.action = pa.actions[k];
      }
    }
    out.iterations = iterations_;
    out.tree_size = nodes_.size();
    out.max_depth = max_depth_;
    return out;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  long iterations() const { return iterations_; }

 private:
  struct PathStep {
    std::size_t node;
    std::vector<int> choice;
  };

  void add_node(const AuctionState& state, int depth) {
    if (depth >= params_.r_max) throw std::logic_error("search tree depth bound exceeded");
    TreeNode node;
    node.key = node_key(root_state_, state, params_.r_max);
    node.state = state;
    node.depth = depth;
    for (int i = 0; i < state.config.n_bidders; ++i) {
      PlayerActions pa;
      pa.actions = expansion_actions(state, i, profiles_[i], p_star_, params_.alpha, params_.n_act);
      pa.stats.resize(pa.actions.size());
      node.players.push_back(std::move(pa));
    }
    table_.emplace(node.key, nodes_.size());
    nodes_.push_back(std::move(node));
    max_depth_ = std::max(max_depth_, depth);
  }

  std::vector<BidderProfile> profiles_;
  PricePrediction p_star_;
  SearchParams params_;
  std::vector<double> alphas_;
  AuctionState root_state_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
  std::unordered_map<NodeKey, std::size_t, NodeKeyHash> table_;
  std::vector<PathStep> path_;
  long iterations_ = 0;
  int max_depth_ = 0;
};

inline SearchResult sms_search(const AuctionState& state, int player, std::span<const BidderProfile> profiles,
                               std::span<const Money> p_star, const SearchParams& params) {
  SimultaneousSearch search(state, profiles, p_star, params);
  return search.run(player);
}

inline ItemSet sms_alpha_bid(const AuctionState& state, int player, std::span<const BidderProfile> profiles,
                             std::span<const Money> p_star, const SearchParams& params) {
  return sms_search(state, player, profiles, p_star, params).action;
}

// Searches afresh at every decision; the search seed advances per decision
// so replays under an iteration budget are deterministic.
class SmsStrategy : public Strategy {
 public:
  SmsStrategy(PricePrediction p_star, SearchParams params) : p_star_(std::move(p_star)), params_(params) {}

  ItemSet bid(const AuctionState& state, int bidder, std::span<const BidderProfile> profiles, Rng&) override {
    SearchParams p = params_;
    p.rng_seed = derive_seed(params_.rng_seed, {static_cast<std::uint64_t>(bidder), decisions_++});
    last_ = sms_search(state, bidder, profiles, p_star_, p);
    return last_.action;
  }

  const SearchResult& last_result() const { return last_; }
  const PricePrediction& prediction() const { return p_star_; }

 private:
  PricePrediction p_star_;
  SearchParams params_;
  std::uint64_t decisions_ = 0;
  SearchResult last_;
};

}  // namespace saac
