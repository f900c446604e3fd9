#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "saac/io.hpp"
#include "saac/registry.hpp"
#include "saac/trace.hpp"

namespace saac {

// Errors carry a machine-readable code: BUDGET, ELIGIBILITY, ALREADY_WINNING,
// UNKNOWN_ITEM, NOT_READY, TERMINAL, OUT_OF_ORDER, INVALID_WINNER,
// INVALID_REQUEST or NOT_FOUND.
class AdvisorError : public std::runtime_error {
 public:
  AdvisorError(std::string code, const std::string& message, nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

  const std::string& code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"code", code_}, {"message", what()}};
    if (!detail_.empty()) j["detail"] = detail_;
    return j;
  }

 private:
  std::string code_;
  nlohmann::json detail_;
};

inline nlohmann::json items_json(ItemSet s) { return to_items(s); }

inline ItemSet items_from_json(const nlohmann::json& j, int m) {
  if (!j.is_array()) throw AdvisorError("INVALID_REQUEST", "item lists must be arrays of item indices");
  ItemSet s = 0;
  for (const auto& e : j) {
    if (!e.is_number_integer()) throw AdvisorError("INVALID_REQUEST", "item indices must be integers");
    const int item = e.get<int>();
    if (item < 0 || item >= m)
      throw AdvisorError("UNKNOWN_ITEM", "item " + std::to_string(item) + " does not exist", {{"item", item}});
    s |= singleton(item);
  }
  return s;
}

inline nlohmann::json state_json(const AuctionState& s) {
  nlohmann::json winners = nlohmann::json::array();
  for (int w : s.winner) winners.push_back(w == kAuctioneer ? nlohmann::json(nullptr) : nlohmann::json(w));
  nlohmann::json prices = nlohmann::json::array();
  for (Ticks p : s.prices) prices.push_back(s.config.to_money(p));
  return {{"round", s.round},
          {"prices", prices},
          {"price_ticks", s.prices},
          {"winners", winners},
          {"eligibility", s.eligibility},
          {"terminal", s.terminal}};
}

inline AdvisorError bid_error(int bidder, ItemSet bid, Violation v) {
  return AdvisorError(std::string(violation_code(v)),
                      "bid " + format_items(bid) + " of bidder " + std::to_string(bidder) + " is illegal",
                      {{"bidder", bidder}, {"bid", items_json(bid)}});
}

struct WhatIfSummary {
  ItemSet action = 0;
  int samples = 0;
  int horizon = 0;  // 0: play to the end
  double mean_utility = 0.0;
  double min_utility = 0.0;
  double max_utility = 0.0;
  double mean_risk_averse = 0.0;
  double exposure_frequency = 0.0;
  double terminal_fraction = 0.0;
  std::vector<Money> mean_prices;
};

inline nlohmann::json what_if_json(const WhatIfSummary& w) {
  return {{"action", items_json(w.action)},
          {"samples", w.samples},
          {"horizon", w.horizon},
          {"utility", {{"mean", w.mean_utility}, {"min", w.min_utility}, {"max", w.max_utility}}},
          {"risk_averse_mean", w.mean_risk_averse},
          {"exposure_frequency", w.exposure_frequency},
          {"terminal_fraction", w.terminal_fraction},
          {"closing_price_means", w.mean_prices}};
}

inline nlohmann::json search_result_json(const SearchResult& r) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : r.root_table)
    table.push_back({{"action", items_json(row.action)},
                     {"mean", row.mean},
                     {"visits", row.n},
                     {"min", row.min},
                     {"max", row.max}});
  return {{"action", items_json(r.action)},
          {"iterations", r.iterations},
          {"tree_size", r.tree_size},
          {"max_depth", r.max_depth},
          {"root_table", table}};
}

// The auction as seen by one bidding team: profiles are the team's point
// estimates, rounds enter as observed joint bids plus observed tie winners.
class AdvisorSession {
 public:
  AdvisorSession(std::string id, Instance instance, int advised, SearchParams search, std::uint64_t seed)
      : id_(std::move(id)),
        instance_(std::move(instance)),
        advised_(advised),
        search_(search),
        seed_(seed),
        state_(AuctionState::initial(instance_.config)) {
    if (advised_ < 0 || advised_ >= instance_.config.n_bidders)
      throw AdvisorError("INVALID_REQUEST", "advised bidder index out of range");
    search_.validate();
  }

  const std::string& id() const { return id_; }
  const Instance& instance() const { return instance_; }
  int advised() const { return advised_; }
  const SearchParams& search_params() const { return search_; }
  const AuctionState& state() const { return state_; }
  const std::vector<RoundRecord>& history() const { return history_; }
  std::uint64_t seed() const { return seed_; }

  // `round` is the number of rounds already committed. `winners` maps item to
  // observed temporary winner; it is required exactly on tied items and
  // optional where a single bidder raised.
  const AuctionState& record_round(int round, const std::vector<ItemSet>& bids, const std::map<int, int>& winners) {
    if (state_.terminal) throw AdvisorError("TERMINAL", "auction already closed");
    if (round != state_.round)
      throw AdvisorError("OUT_OF_ORDER", "expected round " + std::to_string(state_.round),
                         {{"expected", state_.round}, {"got", round}});
    const int n = instance_.config.n_bidders, m = instance_.config.m_items;
    if (static_cast<int>(bids.size()) != n) throw AdvisorError("INVALID_REQUEST", "need one bid per bidder");
    for (int i = 0; i < n; ++i)
      if (auto v = check_bid(state_, i, instance_.profiles[i], bids[i])) throw bid_error(i, bids[i], *v);
    for (const auto& [item, who] : winners) {
      if (item < 0 || item >= m) throw AdvisorError("INVALID_WINNER", "winner given for unknown item", {{"item", item}});
      if (who < 0 || who >= n || !contains(bids[who], item))
        throw AdvisorError("INVALID_WINNER", "observed winner of item " + std::to_string(item) + " did not bid on it",
                           {{"item", item}, {"bidder", who}});
    }
    for (int j = 0; j < m; ++j) {
      int count = 0;
      for (int i = 0; i < n; ++i) count += contains(bids[i], j);
      if (count > 1 && !winners.count(j))
        throw AdvisorError("INVALID_WINNER", "tie on item " + std::to_string(j) + " needs an observed winner",
                           {{"item", j}});
    }
    AuctionState next = state_;
    detail::resolve_round(next, bids, [&](int item, const int* cand, int count) {
      const int who = winners.at(item);
      for (int k = 0; k < count; ++k)
        if (cand[k] == who) return k;
      return 0;
    });
    history_.push_back(make_record(next, bids));
    state_ = std::move(next);
    return state_;
  }

  AuctionTrace trace() const { return {instance_.config, history_}; }

  // Recomputes the state from the committed history.
  AuctionState replay() const { return replay_trace(trace(), instance_.profiles); }

  // Swaps in edited profile estimates; the committed history must stay legal.
  void set_profiles(std::vector<BidderProfile> profiles) {
    if (static_cast<int>(profiles.size()) != instance_.config.n_bidders)
      throw AdvisorError("INVALID_REQUEST", "need one profile per bidder");
    try {
      replay_trace(trace(), profiles);
    } catch (const std::exception& e) {
      throw AdvisorError("INVALID_REQUEST", std::string("recorded history does not replay under the edited profiles: ") +
                                                e.what());
    }
    instance_.profiles = std::move(profiles);
  }

  std::vector<Money> final_utilities() const { return make_outcome(state_, instance_.profiles).utilities; }

  nlohmann::json state_view() const {
    auto j = state_json(state_);
    j["session"] = id_;
    j["advised"] = advised_;
    if (state_.terminal) j["final_utilities"] = final_utilities();
    std::vector<Money> remaining;
    for (int i = 0; i < instance_.config.n_bidders; ++i)
      remaining.push_back(instance_.profiles[i].budget - state_.price_sum(state_.won_by(i)));
    j["remaining_budget"] = remaining;
    return j;
  }

  std::uint64_t recommend_seed() const { return derive_seed(seed_, {std::uint64_t(state_.round), 0}); }

  SearchResult recommend(std::span<const Money> p_star) const {
    if (state_.terminal) throw AdvisorError("TERMINAL", "auction already closed");
    SearchParams p = search_;
    p.rng_seed = recommend_seed();
    return sms_search(state_, advised_, instance_.profiles, p_star, p);
  }

  WhatIfSummary what_if(std::span<const Money> p_star, ItemSet action, int horizon, int samples) const {
    return simulate_what_if(state_, instance_.profiles, advised_, search_.alpha, p_star, action, horizon, samples,
                            derive_seed(seed_, {std::uint64_t(state_.round), 1, action}));
  }

  // Forces `action` for the advised bidder this round; everyone else, and
  // everyone afterwards, plays PP on p* perturbed by U[-eps, eps] per item.
  // Utilities are scored at the prices reached after `horizon` rounds
  // (0: at the close).
  static WhatIfSummary simulate_what_if(const AuctionState& state, std::span<const BidderProfile> profiles,
                                        int advised, double alpha, std::span<const Money> p_star, ItemSet action,
                                        int horizon, int samples, std::uint64_t seed) {
    if (state.terminal) throw AdvisorError("TERMINAL", "auction already closed");
    if (samples < 1) throw AdvisorError("INVALID_REQUEST", "samples must be positive");
    if (horizon < 0) throw AdvisorError("INVALID_REQUEST", "horizon must be non-negative");
    if (auto v = check_bid(state, advised, profiles[advised], action)) throw bid_error(advised, action, *v);
    const int n = state.config.n_bidders, m = state.config.m_items;
    const Money eps = state.config.epsilon;
    WhatIfSummary w;
    w.action = action;
    w.samples = samples;
    w.horizon = horizon;
    w.min_utility = std::numeric_limits<double>::infinity();
    w.max_utility = -std::numeric_limits<double>::infinity();
    w.mean_prices.assign(m, 0.0);
    long losses = 0, closed = 0;
    std::vector<PricePrediction> noisy(n, PricePrediction(m));
    std::array<ItemSet, kMaxBidders> bids{};
    for (int s = 0; s < samples; ++s) {
      Rng rng = make_rng(derive_seed(seed, {std::uint64_t(s)}));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) noisy[i][j] = std::max(0.0, p_star[j] + uniform_real(rng, -eps, eps));
      AuctionState cur = state;
      for (int i = 0; i < n; ++i) bids[i] = i == advised ? action : pp_bid(noisy[i], cur, i, profiles[i]);
      detail::resolve_round(cur, std::span<const ItemSet>(bids.data(), n),
                            [&](int, const int*, int count) { return uniform_index(rng, count); });
      play_pp_to_end(cur, profiles, noisy, rng, horizon == 0 ? -1 : horizon - 1);
      const Money u = utility(profiles[advised].values, cur.won_by(advised), cur.prices, eps);
      w.mean_utility += u;
      w.mean_risk_averse += risk_averse_utility(u, alpha);
      w.min_utility = std::min(w.min_utility, u);
      w.max_utility = std::max(w.max_utility, u);
      losses += u < 0.0;
      closed += cur.terminal;
      for (int j = 0; j < m; ++j) w.mean_prices[j] += cur.config.to_money(cur.prices[j]);
    }
    w.mean_utility /= samples;
    w.mean_risk_averse /= samples;
    w.exposure_frequency = static_cast<double>(losses) / samples;
    w.terminal_fraction = static_cast<double>(closed) / samples;
    for (Money& p : w.mean_prices) p /= samples;
    return w;
  }

 private:
  std::string id_;
  Instance instance_;
  int advised_;
  SearchParams search_;
  std::uint64_t seed_;
  AuctionState state_;
  std::vector<RoundRecord> history_;
};

// Fixed set of worker threads draining a FIFO queue. Pending tasks are
// dropped on shutdown; running ones finish.
class TaskPool {
 public:
  explicit TaskPool(int workers) {
    for (int w = 0; w < std::max(workers, 1); ++w)
      threads_.emplace_back([this](std::stop_token st) { loop(st); });
  }

  ~TaskPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
      queue_.clear();
    }
    cv_.notify_all();
    threads_.clear();
  }

  void submit(std::function<void()> task) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

 private:
  void loop(std::stop_token) {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      task();
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::vector<std::jthread> threads_;
};

struct PredictionJob {
  std::atomic<int> done{0};
  std::atomic<int> total{0};
  std::mutex mutex;
  std::optional<PricePrediction> result;
  bool converged = false;
  std::string error;

  bool ready() {
    std::lock_guard lock(mutex);
    return result.has_value();
  }
};

struct AsyncResult {
  std::mutex mutex;
  bool finished = false;
  int round = 0;
  nlohmann::json body;
  std::optional<AdvisorError> error;
};

struct AdvisorOptions {
  int workers = 2;
  PredictorParams predictor = [] {
    PredictorParams p;
    p.tolerance = 0.0;  // <= 0: epsilon / 10
    return p;
  }();
  std::uint64_t seed = 1;
};

// Thread-safe registry of sessions. Long computations (p*, recommendations,
// what-if runs) execute on the task pool and are polled.
class AdvisorService {
 public:
  explicit AdvisorService(AdvisorOptions options = {}) : options_(std::move(options)), pool_(options_.workers) {}

  // Body: {"config": {...}, "bidders": [...], "advised": i, "search": {...},
  // "prediction": {...}, "p_star": [...], "seed": s}. Only config and
  // bidders are required.
  std::string create_session(const nlohmann::json& body) {
    Instance inst;
    try {
      inst = instance_from_json(body);
    } catch (const ConfigError& e) {
      throw AdvisorError("INVALID_REQUEST", e.what());
    } catch (const nlohmann::json::exception& e) {
      throw AdvisorError("INVALID_REQUEST", std::string("malformed session request: ") + e.what());
    }
    SearchParams search;
    PredictorParams pred = options_.predictor;
    if (pred.tolerance <= 0) pred.tolerance = inst.config.epsilon / 10.0;
    try {
      search = search_params_from_json(body.value("search", nlohmann::json()));
      if (body.contains("prediction")) {
        const auto& p = body.at("prediction");
        pred.mc_samples = p.value("mc_samples", pred.mc_samples);
        pred.max_iters = p.value("max_iters", pred.max_iters);
        pred.tolerance = p.value("tolerance", pred.tolerance);
        pred.validate();
      }
    } catch (const std::exception& e) {
      throw AdvisorError("INVALID_REQUEST", e.what());
    }
    const int advised = body.value("advised", 0);
    std::lock_guard lock(mutex_);
    const std::string id = "s" + std::to_string(++next_id_);
    auto entry = std::make_shared<Entry>(AdvisorSession(
        id, inst, advised, search, body.value("seed", derive_seed(options_.seed, {std::uint64_t(next_id_)}))));
    entry->predictor = pred;
    if (body.contains("p_star")) {
      auto p = body.at("p_star").get<PricePrediction>();
      if (static_cast<int>(p.size()) != inst.config.m_items)
        throw AdvisorError("INVALID_REQUEST", "p_star needs one entry per item");
      entry->prediction = std::make_shared<PredictionJob>();
      entry->prediction->result = std::move(p);
      entry->prediction->converged = true;
    } else {
      entry->prediction = prediction_job(inst, pred);
    }
    sessions_.emplace(id, entry);
    return id;
  }

  nlohmann::json state(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    auto j = e->session.state_view();
    j["prediction"] = prediction_status(*e);
    return j;
  }

  nlohmann::json record_round(const std::string& id, const nlohmann::json& body) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    const auto& cfg = e->session.instance().config;
    std::vector<ItemSet> bids;
    std::map<int, int> winners;
    int round = 0;
    try {
      round = body.at("round").get<int>();
      for (const auto& b : body.at("bids")) bids.push_back(items_from_json(b, cfg.m_items));
      if (body.contains("winners"))
        for (const auto& [item, who] : body.at("winners").items()) winners[std::stoi(item)] = who.get<int>();
    } catch (const AdvisorError&) {
      throw;
    } catch (const std::exception& e2) {
      throw AdvisorError("INVALID_REQUEST", std::string("malformed round: ") + e2.what());
    }
    e->session.record_round(round, bids, winners);
    return e->session.state_view();
  }

  nlohmann::json prediction(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    return prediction_status(*e);
  }

  // Starts (or returns the existing) search for the current round.
  nlohmann::json start_recommend(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    const auto& s = e->session;
    if (s.state().terminal) throw AdvisorError("TERMINAL", "auction already closed");
    auto p_star = ready_prediction(*e);
    if (e->recommend && e->recommend_round == s.state().round && e->recommend_generation == e->generation)
      return async_status(*e->recommend, s.state().round);
    auto job = std::make_shared<AsyncResult>();
    job->round = s.state().round;
    e->recommend = job;
    e->recommend_round = s.state().round;
    e->recommend_generation = e->generation;
    AdvisorSession snapshot = s;
    pool_.submit([job, snapshot = std::move(snapshot), p_star = std::move(p_star)] {
      run_job(*job, [&] {
        auto r = snapshot.recommend(p_star);
        auto j = search_result_json(r);
        j["round"] = snapshot.state().round;
        return j;
      });
    });
    return async_status(*job, s.state().round);
  }

  nlohmann::json get_recommend(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    if (!e->recommend) throw AdvisorError("NOT_FOUND", "no recommendation requested yet");
    auto j = async_status(*e->recommend, e->session.state().round);
    if (e->recommend_generation != e->generation) j["stale"] = true;
    return j;
  }

  // Body: {"action": [items], "horizon": h, "samples": k}. Returns a job id.
  nlohmann::json start_what_if(const std::string& id, const nlohmann::json& body) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    const auto& s = e->session;
    if (s.state().terminal) throw AdvisorError("TERMINAL", "auction already closed");
    ItemSet action = 0;
    int horizon = 0, samples = 0;
    try {
      action = items_from_json(body.at("action"), s.instance().config.m_items);
      horizon = body.value("horizon", 0);
      samples = body.value("samples", 1000);
    } catch (const AdvisorError&) {
      throw;
    } catch (const std::exception& ex) {
      throw AdvisorError("INVALID_REQUEST", std::string("malformed what-if: ") + ex.what());
    }
    if (samples < 1 || horizon < 0) throw AdvisorError("INVALID_REQUEST", "samples must be positive, horizon >= 0");
    const int advised = s.advised();
    if (auto v = check_bid(s.state(), advised, s.instance().profiles[advised], action))
      throw bid_error(advised, action, *v);
    auto p_star = ready_prediction(*e);
    auto job = std::make_shared<AsyncResult>();
    job->round = s.state().round;
    const std::string job_id = "w" + std::to_string(++e->next_what_if);
    e->what_ifs.emplace(job_id, job);
    AdvisorSession snapshot = s;
    pool_.submit([job, snapshot = std::move(snapshot), p_star = std::move(p_star), action, horizon, samples] {
      run_job(*job, [&] {
        auto j = what_if_json(snapshot.what_if(p_star, action, horizon, samples));
        j["round"] = snapshot.state().round;
        return j;
      });
    });
    auto j = async_status(*job, s.state().round);
    j["job"] = job_id;
    return j;
  }

  nlohmann::json get_what_if(const std::string& id, const std::string& job_id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    auto it = e->what_ifs.find(job_id);
    if (it == e->what_ifs.end()) throw AdvisorError("NOT_FOUND", "unknown what-if job '" + job_id + "'");
    auto j = async_status(*it->second, e->session.state().round);
    j["job"] = job_id;
    return j;
  }

  // Body: {"bidders": [...]} in the instance format. p* is recomputed.
  nlohmann::json edit_profiles(const std::string& id, const nlohmann::json& body) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    Instance edited;
    try {
      nlohmann::json doc{{"config", config_to_json(e->session.instance().config)}, {"bidders", body.at("bidders")}};
      edited = instance_from_json(doc);
    } catch (const ConfigError& ex) {
      throw AdvisorError("INVALID_REQUEST", ex.what());
    } catch (const nlohmann::json::exception& ex) {
      throw AdvisorError("INVALID_REQUEST", std::string("malformed profiles: ") + ex.what());
    }
    e->session.set_profiles(edited.profiles);
    e->prediction = prediction_job(e->session.instance(), e->predictor);
    ++e->generation;
    auto j = e->session.state_view();
    j["prediction"] = prediction_status(*e);
    return j;
  }

  std::string export_trace(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    return write_trace(e->session.trace());
  }

  // Copy of the session for inspection.
  AdvisorSession session(const std::string& id) {
    auto e = find(id);
    std::lock_guard lock(e->mutex);
    return e->session;
  }

 private:
  struct Entry {
    explicit Entry(AdvisorSession s) : session(std::move(s)) {}
    std::mutex mutex;
    AdvisorSession session;
    PredictorParams predictor;
    std::shared_ptr<PredictionJob> prediction;
    long generation = 0;  // bumped by profile edits
    std::shared_ptr<AsyncResult> recommend;
    int recommend_round = -1;
    long recommend_generation = -1;
    std::map<std::string, std::shared_ptr<AsyncResult>> what_ifs;
    int next_what_if = 0;
  };

  template <class Fn>
  static void run_job(AsyncResult& job, Fn&& fn) {
    nlohmann::json body;
    std::optional<AdvisorError> err;
    try {
      body = fn();
    } catch (const AdvisorError& e) {
      err = e;
    } catch (const std::exception& e) {
      err = AdvisorError("INVALID_REQUEST", e.what());
    }
    std::lock_guard lock(job.mutex);
    job.body = std::move(body);
    job.error = std::move(err);
    job.finished = true;
  }

  static nlohmann::json async_status(AsyncResult& job, int current_round) {
    std::lock_guard lock(job.mutex);
    nlohmann::json j{{"status", job.finished ? (job.error ? "failed" : "done") : "running"}, {"round", job.round}};
    if (job.finished && job.error) j["error"] = job.error->to_json();
    if (job.finished && !job.error) j["result"] = job.body;
    j["stale"] = job.round != current_round;
    return j;
  }

  std::shared_ptr<Entry> find(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw AdvisorError("NOT_FOUND", "unknown session '" + id + "'");
    return it->second;
  }

  // p* is shared between sessions with identical instance and predictor
  // settings.
  std::shared_ptr<PredictionJob> prediction_job(const Instance& inst, const PredictorParams& pred) {
    const std::string key = instance_to_json(inst).dump() + "|" + std::to_string(pred.mc_samples) + "|" +
                            std::to_string(pred.max_iters) + "|" + format_money(pred.tolerance);
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    auto job = std::make_shared<PredictionJob>();
    job->total = pred.max_iters;
    cache_.emplace(key, job);
    PredictorParams p = pred;
    p.rng_seed = derive_seed(options_.seed, {std::hash<std::string>{}(key)});
    pool_.submit([job, inst, p] {
      try {
        auto r = iterate_prediction(inst, p, [&](int t, int total) {
          job->done = t;
          job->total = total;
        });
        std::lock_guard lock(job->mutex);
        job->converged = r.trace.converged;
        job->result = std::move(r.p_star);
      } catch (const std::exception& e) {
        std::lock_guard lock(job->mutex);
        job->error = e.what();
      }
    });
    return job;
  }

  static nlohmann::json prediction_status(Entry& e) {
    auto& job = *e.prediction;
    std::lock_guard lock(job.mutex);
    nlohmann::json j{{"ready", job.result.has_value()}, {"progress", job.done.load()}, {"total", job.total.load()}};
    if (job.result) {
      j["p_star"] = *job.result;
      j["converged"] = job.converged;
    }
    if (!job.error.empty()) j["error"] = job.error;
    return j;
  }

  PricePrediction ready_prediction(Entry& e) {
    auto& job = *e.prediction;
    std::lock_guard lock(job.mutex);
    if (!job.error.empty()) throw AdvisorError("INVALID_REQUEST", "price prediction failed: " + job.error);
    if (!job.result)
      throw AdvisorError("NOT_READY", "price prediction still computing",
                         {{"progress", job.done.load()}, {"total", job.total.load()}});
    return *job.result;
  }

  AdvisorOptions options_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  long next_id_ = 0;
  std::mutex cache_mutex_;
  std::map<std::string, std::shared_ptr<PredictionJob>> cache_;
  TaskPool pool_;  // last: joined before the state it touches is destroyed
};

}  // namespace saac
