#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "saac/types.hpp"

namespace saac {

// Per-strategy performance indicators over N plays.
struct MetricsReport {
  double expected_utility = 0.0;
  double positive_part = 0.0;        // P(R >= 0) E(R | R >= 0)
  double exposure_frequency = 0.0;   // P(R < 0)
  double expected_exposure = 0.0;    // -P(R < 0) E(R | R < 0)
  std::optional<double> avg_price_per_item_won;
  double ratio_items_won = 0.0;
  long sample_count = 0;
};

// rewards[k], items_won[k] and spend[k] describe play k. ratio_items_won is
// items won / m averaged over plays.
inline MetricsReport compute_metrics(std::span<const double> rewards, std::span<const int> items_won,
                                     std::span<const double> spend, int m_items) {
  if (rewards.empty()) throw std::invalid_argument("metrics need at least one sample");
  if (items_won.size() != rewards.size() || spend.size() != rewards.size())
    throw std::invalid_argument("metrics inputs must have equal lengths");
  if (m_items < 1) throw std::invalid_argument("metrics need m >= 1");
  const auto n = static_cast<double>(rewards.size());
  double pos = 0.0, neg = 0.0, spent = 0.0;
  long losses = 0, won = 0;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    if (rewards[k] < 0.0) {
      neg += rewards[k];
      ++losses;
    } else {
      pos += rewards[k];
    }
    won += items_won[k];
    spent += spend[k];
  }
  MetricsReport r;
  r.sample_count = static_cast<long>(rewards.size());
  r.positive_part = pos / n;
  r.expected_exposure = losses > 0 ? -neg / n : 0.0;
  r.expected_utility = r.positive_part - r.expected_exposure;
  r.exposure_frequency = static_cast<double>(losses) / n;
  if (won > 0) r.avg_price_per_item_won = spent / static_cast<double>(won);
  r.ratio_items_won = static_cast<double>(won) / (n * m_items);
  return r;
}

// Mean of a metric over the (A,B,..,B), .., (A,..,A,B) profiles.
inline double profile_average(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("profile_average needs values");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

inline double profile_average(double a, double b, double c) {
  const double v[] = {a, b, c};
  return profile_average(v);
}

// Symmetric two-strategy normal-form game. Profile k has k players of A in
// seats 0..k-1 and n-k players of B.
struct EmpiricalGame {
  std::string strategy_a;
  std::string strategy_b;
  int n_players = 0;
  std::vector<std::vector<double>> seat_utility;  // [k][seat], mean over plays
  std::vector<long> plays;                        // plays per profile

  double utility_a(int k) const {
    if (k < 1 || k > n_players) throw std::out_of_range("profile has no A player");
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += seat_utility[k][i];
    return s / k;
  }

  double utility_b(int k) const {
    if (k < 0 || k >= n_players) throw std::out_of_range("profile has no B player");
    double s = 0.0;
    for (int i = k; i < n_players; ++i) s += seat_utility[k][i];
    return s / (n_players - k);
  }
};

struct ProfilePlay {
  int a_count = 0;
  std::vector<double> seat_utilities;
};

inline EmpiricalGame empirical_game_from_plays(std::string a, std::string b, int n_players,
                                               std::span<const ProfilePlay> plays) {
  if (a == b) throw std::invalid_argument("empirical game needs two distinct strategies");
  EmpiricalGame g{std::move(a), std::move(b), n_players, {}, {}};
  g.seat_utility.assign(n_players + 1, std::vector<double>(n_players, 0.0));
  g.plays.assign(n_players + 1, 0);
  for (const auto& p : plays) {
    if (p.a_count < 0 || p.a_count > n_players || static_cast<int>(p.seat_utilities.size()) != n_players)
      throw std::invalid_argument("malformed profile play");
    for (int i = 0; i < n_players; ++i) g.seat_utility[p.a_count][i] += p.seat_utilities[i];
    ++g.plays[p.a_count];
  }
  for (int k = 0; k <= n_players; ++k)
    if (g.plays[k] > 0)
      for (double& u : g.seat_utility[k]) u /= static_cast<double>(g.plays[k]);
  return g;
}

// Gain of a B player at profile k who switches to A (landing in profile k+1).
inline double deviation_gain(const EmpiricalGame& g, int from_count) {
  if (from_count < 0 || from_count >= g.n_players) throw std::out_of_range("invalid deviation profile");
  return g.utility_a(from_count + 1) - g.utility_b(from_count);
}

inline bool deviation_profitable(const EmpiricalGame& g, int from_count) { return deviation_gain(g, from_count) > 0.0; }

using BigInt = boost::multiprecision::cpp_int;

// Information sets of an unconstrained n-bidder, m-item game over R rounds:
// n (R n + 1)^m.
inline BigInt info_set_count(int n, int m, int rounds) {
  if (n < 1 || m < 0 || rounds < 0) throw std::invalid_argument("info_set_count: bad arguments");
  BigInt base = BigInt(rounds) * n + 1;
  BigInt out = n;
  for (int j = 0; j < m; ++j) out *= base;
  return out;
}

inline double log10_big(const BigInt& x) {
  const std::string digits = x.str();
  const std::size_t lead = std::min<std::size_t>(digits.size(), 17);
  return std::log10(std::stod(digits.substr(0, lead))) + static_cast<double>(digits.size() - lead);
}

// log10 of the 2^(m (n-1) R) game-tree lower bound.
inline double game_tree_lower_bound_log10(int n, int m, int rounds) {
  if (n < 1 || m < 0 || rounds < 0) throw std::invalid_argument("game_tree_lower_bound_log10: bad arguments");
  return static_cast<double>(m) * (n - 1) * rounds * std::log10(2.0);
}

}  // namespace saac
