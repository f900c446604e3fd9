#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "saac/parallel.hpp"
#include "saac/rng.hpp"
#include "saac/strategies.hpp"
#include "saac/trace.hpp"

namespace saac {

struct PredictorParams {
  int mc_samples = 2000;
  int max_iters = 300;
  double tolerance = 0.1;
  std::uint64_t rng_seed = 0;
  int workers = 1;

  void validate() const {
    if (mc_samples < 1) throw ConfigError("predictor: mc_samples must be positive");
    if (max_iters < 1) throw ConfigError("predictor: max_iters must be positive");
    if (!(tolerance > 0.0)) throw ConfigError("predictor: tolerance must be positive");
    if (workers < 1) throw ConfigError("predictor: workers must be positive");
  }

  static PredictorParams defaults_for(const AuctionConfig& config) {
    PredictorParams p;
    p.tolerance = config.epsilon / 10.0;
    return p;
  }
};

struct ConvergenceTrace {
  std::vector<PricePrediction> iterates;  // p_0 = 0, p_1, ...
  std::vector<double> deltas;             // sup-norm |p_{t+1} - p_t|
  bool converged = false;
};

struct PredictionResult {
  PricePrediction p_star;
  ConvergenceTrace trace;
};

// Mean closing prices (money) over `samples` auctions in which every bidder
// plays PP with initial prediction p. Sample k draws its tie-breaks from
// derive_seed(seed, {k}), so the estimate does not depend on `workers`.
inline PricePrediction estimate_expected_closing(const Instance& inst, std::span<const Money> p, int samples,
                                                 std::uint64_t seed, int workers = 1) {
  if (samples < 1) throw ConfigError("estimate: samples must be >= 1");
  const int m = inst.config.m_items;
  const std::vector<PricePrediction> predictions(inst.config.n_bidders, PricePrediction(p.begin(), p.end()));
  const AuctionState start = AuctionState::initial(inst.config);
  std::vector<Ticks> totals(static_cast<std::size_t>(samples) * m);
  parallel_for(samples, workers, [&](int k) {
    AuctionState state = start;
    Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
    play_pp_to_end(state, inst.profiles, predictions, rng);
    std::copy(state.prices.begin(), state.prices.end(), totals.begin() + static_cast<std::ptrdiff_t>(k) * m);
  });
  PricePrediction mean(m, 0.0);
  for (int j = 0; j < m; ++j) {
    Ticks sum = 0;
    for (int k = 0; k < samples; ++k) sum += totals[static_cast<std::size_t>(k) * m + j];
    mean[j] = inst.config.to_money(sum) / samples;
  }
  return mean;
}

// Averaged fixed-point iteration p_{t+1} = E[f(p_t)]/(t+1) + (1 - 1/(t+1)) p_t
// from p_0 = 0. Non-convergence within max_iters is reported through
// trace.converged, never thrown.
inline PredictionResult iterate_prediction(const Instance& inst, const PredictorParams& params,
                                           const std::function<void(int, int)>& progress = {}) {
  params.validate();
  const int m = inst.config.m_items;
  PredictionResult out;
  PricePrediction p(m, 0.0);
  out.trace.iterates.push_back(p);
  for (int t = 0; t < params.max_iters; ++t) {
    const PricePrediction est = estimate_expected_closing(
        inst, p, params.mc_samples, derive_seed(params.rng_seed, {static_cast<std::uint64_t>(t)}), params.workers);
    const double w = 1.0 / (t + 1);
    double delta = 0.0;
    for (int j = 0; j < m; ++j) {
      const double next = w * est[j] + (1.0 - w) * p[j];
      delta = std::max(delta, std::abs(next - p[j]));
      p[j] = next;
    }
    out.trace.iterates.push_back(p);
    out.trace.deltas.push_back(delta);
    if (progress) progress(t + 1, params.max_iters);
    if (delta < params.tolerance) {
      out.trace.converged = true;
      break;
    }
  }
  out.p_star = p;
  return out;
}

// Columnar export: iteration, p_0..p_{m-1}, delta (empty for iteration 0).
inline std::string trace_to_csv(const ConvergenceTrace& trace) {
  std::string out = "iteration";
  const std::size_t m = trace.iterates.empty() ? 0 : trace.iterates.front().size();
  for (std::size_t j = 0; j < m; ++j) out += ",p" + std::to_string(j);
  out += ",delta\n";
  for (std::size_t t = 0; t < trace.iterates.size(); ++t) {
    out += std::to_string(t);
    for (Money x : trace.iterates[t]) out += "," + format_money(x);
    out += ",";
    if (t > 0) out += format_money(trace.deltas[t - 1]);
    out += "\n";
  }
  return out;
}

// Closed-form expected closing prices of the two-item exposure instance when
// both bidders play PP(p) with unlimited budgets. Valid on [0, 11.5]^2 only.
inline PricePrediction closed_form_example1(std::span<const Money> p) {
  if (p.size() != 2) throw std::domain_error("closed form needs a 2-item prediction");
  for (Money x : p)
    if (x < 0.0 || x > 11.5) throw std::domain_error("closed form valid only on [0, 11.5]^2");
  const bool high = p[0] + p[1] >= 20.0;
  const bool first_cheaper = p[0] <= p[1];
  if (high) return first_cheaper ? PricePrediction{1.0, 0.0} : PricePrediction{0.0, 1.0};
  return first_cheaper ? PricePrediction{11.5, 11.0} : PricePrediction{11.0, 11.5};
}

}  // namespace saac
