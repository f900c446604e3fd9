#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "saac/price_prediction.hpp"
#include "saac/sm_mcts.hpp"
#include "saac/strategies.hpp"

namespace saac {

struct PredictionSettings {
  PredictorParams predictor;
  double epe_kappa = 0.0;  // 0: epsilon / 2
  int epe_iters = 200;
};

// Offline closing-price predictions for one instance, computed on first use.
class PredictionCache {
 public:
  PredictionCache(const Instance& inst, PredictionSettings settings) : inst_(inst), settings_(std::move(settings)) {}

  const PricePrediction& fixed_point() {
    std::lock_guard lock(mutex_);
    if (!fixed_point_) fixed_point_ = iterate_prediction(inst_, settings_.predictor).p_star;
    return *fixed_point_;
  }

  const PricePrediction& epe() {
    std::lock_guard lock(mutex_);
    if (!epe_) {
      const double kappa = settings_.epe_kappa > 0 ? settings_.epe_kappa : inst_.config.epsilon / 2;
      epe_ = epe_prediction(inst_.profiles, inst_.config, kappa, settings_.epe_iters);
    }
    return *epe_;
  }

  void set_fixed_point(PricePrediction p) {
    std::lock_guard lock(mutex_);
    fixed_point_ = std::move(p);
  }

  bool has_fixed_point() const {
    std::lock_guard lock(mutex_);
    return fixed_point_.has_value();
  }

 private:
  const Instance& inst_;
  PredictionSettings settings_;
  mutable std::mutex mutex_;
  std::optional<PricePrediction> fixed_point_;
  std::optional<PricePrediction> epe_;
};

struct StrategyContext {
  const Instance& instance;
  const nlohmann::json& params;
  PredictionCache& predictions;
  std::uint64_t seed = 0;
};

using StrategyFactory = std::function<std::unique_ptr<Strategy>(const StrategyContext&)>;

inline SearchParams search_params_from_json(const nlohmann::json& j, SearchParams base = {}) {
  if (j.is_null()) return base;
  base.alpha = j.value("alpha", base.alpha);
  base.n_act = j.value("n_act", base.n_act);
  base.r_max = j.value("r_max", base.r_max);
  base.max_iterations = j.value("iterations", base.max_iterations);
  base.time_budget = std::chrono::milliseconds(j.value("time_ms", static_cast<long>(base.time_budget.count())));
  base.validate();
  return base;
}

inline nlohmann::json search_params_to_json(const SearchParams& p) {
  return {{"alpha", p.alpha},
          {"n_act", p.n_act},
          {"r_max", p.r_max},
          {"iterations", p.max_iterations},
          {"time_ms", static_cast<long>(p.time_budget.count())}};
}

// Prediction source for PP: a literal vector, "fixed-point" or "epe".
inline PricePrediction resolve_prediction(const nlohmann::json& source, const StrategyContext& ctx) {
  const int m = ctx.instance.config.m_items;
  if (source.is_array()) {
    auto p = source.get<PricePrediction>();
    if (static_cast<int>(p.size()) != m) throw ConfigError("PP prediction must have one entry per item");
    for (Money x : p)
      if (x < 0) throw ConfigError("PP prediction entries must be non-negative");
    return p;
  }
  if (source.is_string()) {
    const auto name = source.get<std::string>();
    if (name == "fixed-point") return ctx.predictions.fixed_point();
    if (name == "epe") return ctx.predictions.epe();
    if (name == "zero") return PricePrediction(m, 0.0);
  }
  throw ConfigError("unknown PP prediction source: " + source.dump());
}

class StrategyRegistry {
 public:
  void register_strategy(const std::string& name, StrategyFactory factory) {
    if (name.empty()) throw ConfigError("strategy name must not be empty");
    if (!factories_.emplace(name, std::move(factory)).second)
      throw ConfigError("strategy '" + name + "' is already registered");
  }

  bool contains(const std::string& name) const { return factories_.count(name) > 0; }

  const StrategyFactory& resolve(const std::string& name) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ConfigError("unknown strategy '" + name + "'");
    return it->second;
  }

  std::unique_ptr<Strategy> create(const std::string& name, const StrategyContext& ctx) const {
    return resolve(name)(ctx);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, f] : factories_) out.push_back(name);
    return out;
  }

 private:
  std::map<std::string, StrategyFactory> factories_;
};

// Built-ins: SB, PP, EPE, SMS, plus PASS and CHEAPEST (unit-demand) helpers.
inline StrategyRegistry default_registry() {
  StrategyRegistry r;
  r.register_strategy("SB", [](const StrategyContext& ctx) {
    return std::make_unique<PointPriceStrategy>(PricePrediction(ctx.instance.config.m_items, 0.0));
  });
  r.register_strategy("PP", [](const StrategyContext& ctx) {
    const auto source = ctx.params.is_object() ? ctx.params.value("prediction", nlohmann::json("fixed-point"))
                                               : nlohmann::json("fixed-point");
    return std::make_unique<PointPriceStrategy>(resolve_prediction(source, ctx));
  });
  r.register_strategy("EPE", [](const StrategyContext& ctx) {
    return std::make_unique<PointPriceStrategy>(ctx.predictions.epe());
  });
  r.register_strategy("SMS", [](const StrategyContext& ctx) {
    SearchParams p = search_params_from_json(ctx.params);
    p.rng_seed = ctx.seed;
    return std::make_unique<SmsStrategy>(ctx.predictions.fixed_point(), p);
  });
  r.register_strategy("PASS", [](const StrategyContext&) { return std::make_unique<PassStrategy>(); });
  r.register_strategy("CHEAPEST", [](const StrategyContext&) { return std::make_unique<CheapestItemStrategy>(); });
  return r;
}

}  // namespace saac
