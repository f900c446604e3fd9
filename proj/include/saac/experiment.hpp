#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saac/analytics.hpp"
#include "saac/io.hpp"
#include "saac/parallel.hpp"
#include "saac/registry.hpp"
#include "saac/trace.hpp"

namespace saac {

inline constexpr const char* kToolVersion = "1.0.0";

struct StrategySpec {
  std::string alias;
  std::string type;
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  int instance_count = 1;
  std::optional<GeneratorParams> generator;
  int gen_n = 2, gen_m = 3;
  Money gen_epsilon = 1.0;
  std::vector<Instance> fixed_instances;  // used round-robin when there is no generator
  PredictorParams predictor;
  bool tolerance_given = false;
  double epe_kappa = 0.0;
  int epe_iters = 200;
  std::vector<StrategySpec> strategies;
  std::vector<std::vector<std::string>> profiles;  // seat -> strategy alias
  std::optional<std::pair<std::string, std::string>> game;
  int workers = 1;
  std::filesystem::path output;
  nlohmann::json snapshot;  // the document this was parsed from

  int n_bidders() const { return generator ? gen_n : fixed_instances.front().config.n_bidders; }
  int m_items() const { return generator ? gen_m : fixed_instances.front().config.m_items; }

  const StrategySpec& spec(const std::string& alias) const {
    for (const auto& s : strategies)
      if (s.alias == alias) return s;
    throw ConfigError("profile refers to undeclared strategy '" + alias + "'");
  }

  std::string profile_label(int k) const {
    std::string out;
    for (std::size_t s = 0; s < profiles[k].size(); ++s) out += (s ? "+" : "") + profiles[k][s];
    return out;
  }
};

// Instance i draws from its own stream, so adding instances leaves earlier
// ones untouched. Stream roles: 0 instance, 1 tie-breaks, 2 strategy seeds,
// 3 price predictor.
inline std::uint64_t instance_seed(std::uint64_t master, int i) { return derive_seed(master, {0, std::uint64_t(i)}); }

inline std::uint64_t cell_seed(std::uint64_t master, int i, int profile) {
  return derive_seed(master, {1, std::uint64_t(i), std::uint64_t(profile)});
}

inline std::uint64_t seat_seed(std::uint64_t master, int i, int profile, int seat) {
  return derive_seed(master, {2, std::uint64_t(i), std::uint64_t(profile), std::uint64_t(seat)});
}

inline std::uint64_t predictor_seed(std::uint64_t master, int i) {
  return derive_seed(master, {3, std::uint64_t(i)});
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {},
                                                const StrategyRegistry& registry = default_registry()) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    c.snapshot = j;
    c.name = j.value("name", c.name);
    c.seed = j.value("seed", std::uint64_t{0});
    c.workers = j.value("workers", 1);
    if (c.workers < 1) throw ConfigError("workers must be positive");
    if (j.contains("output")) c.output = j.at("output").get<std::string>();

    const auto& inst = j.at("instances");
    c.instance_count = inst.value("count", 1);
    if (c.instance_count < 1) throw ConfigError("instances.count must be positive");
    if (inst.contains("generator")) {
      const auto& g = inst.at("generator");
      GeneratorParams gp;
      gp.v_cap = g.value("v_cap", gp.v_cap);
      gp.b_min = g.value("b_min", gp.b_min);
      gp.b_max = g.value("b_max", gp.b_max);
      if (gp.v_cap < 0 || gp.b_min < 0 || gp.b_max < gp.b_min) throw ConfigError("bad generator bounds");
      c.generator = gp;
      c.gen_n = g.value("n", 2);
      c.gen_m = g.value("m", 3);
      c.gen_epsilon = g.value("epsilon", 1.0);
      AuctionConfig{c.gen_n, c.gen_m, c.gen_epsilon, 0}.validate();
    } else if (inst.contains("file")) {
      std::filesystem::path p = inst.at("file").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      c.fixed_instances = load_instances(p);
    } else if (inst.contains("inline")) {
      const auto& e = inst.at("inline");
      if (e.is_array()) {
        for (const auto& x : e) c.fixed_instances.push_back(instance_from_json(x));
      } else {
        c.fixed_instances.push_back(instance_from_json(e));
      }
    } else {
      throw ConfigError("instances needs one of generator, file or inline");
    }
    if (!c.generator) {
      if (c.fixed_instances.empty()) throw ConfigError("no fixed instances given");
      for (const auto& fi : c.fixed_instances)
        if (fi.config.n_bidders != c.fixed_instances.front().config.n_bidders ||
            fi.config.m_items != c.fixed_instances.front().config.m_items)
          throw ConfigError("fixed instances must share n and m");
    }

    if (j.contains("prediction")) {
      const auto& p = j.at("prediction");
      c.predictor.mc_samples = p.value("mc_samples", c.predictor.mc_samples);
      c.predictor.max_iters = p.value("max_iters", c.predictor.max_iters);
      c.tolerance_given = p.contains("tolerance");
      c.predictor.tolerance = p.value("tolerance", c.predictor.tolerance);
      c.epe_kappa = p.value("epe_kappa", 0.0);
      c.epe_iters = p.value("epe_iters", c.epe_iters);
      if (c.epe_iters < 1 || c.epe_kappa < 0) throw ConfigError("bad EPE settings");
    }
    c.predictor.validate();

    // Shared per-decision budget for search strategies; entries in a
    // strategy's own section take precedence.
    nlohmann::json budget = j.value("decision_budget", nlohmann::json::object());
    for (const auto& [alias, body] : j.at("strategies").items()) {
      StrategySpec s;
      s.alias = alias;
      s.type = body.value("type", alias);
      if (!registry.contains(s.type)) throw ConfigError("unknown strategy '" + s.type + "'");
      s.params = body;
      s.params.erase("type");
      if (s.type == "SMS")
        for (const auto& [k, v] : budget.items())
          if (!s.params.contains(k)) s.params[k] = v;
      if (s.type == "SMS") search_params_from_json(s.params);
      c.strategies.push_back(std::move(s));
    }
    if (c.strategies.empty()) throw ConfigError("no strategies declared");

    const int n = c.n_bidders();
    if (j.contains("game") && j.contains("profiles")) throw ConfigError("give either game or profiles, not both");
    if (j.contains("game")) {
      const auto& g = j.at("game");
      c.game = {g.at("a").get<std::string>(), g.at("b").get<std::string>()};
      if (c.game->first == c.game->second) throw ConfigError("game needs two distinct strategies");
      for (int k = 0; k <= n; ++k) {
        std::vector<std::string> prof;
        for (int s = 0; s < n; ++s) prof.push_back(s < k ? c.game->first : c.game->second);
        c.profiles.push_back(std::move(prof));
      }
    } else if (j.contains("profiles")) {
      c.profiles = j.at("profiles").get<std::vector<std::vector<std::string>>>();
    } else {
      throw ConfigError("config needs game or profiles");
    }
    if (c.profiles.empty()) throw ConfigError("no profiles to play");
    for (const auto& prof : c.profiles) {
      if (static_cast<int>(prof.size()) != n) throw ConfigError("each profile needs one strategy per bidder");
      for (const auto& alias : prof) c.spec(alias);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                               const StrategyRegistry& registry = default_registry()) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_experiment_config(j, path.parent_path(), registry);
}

inline Instance make_instance(const ExperimentConfig& c, int i) {
  if (c.generator) return generate_instance(c.gen_n, c.gen_m, c.gen_epsilon, *c.generator, instance_seed(c.seed, i));
  return c.fixed_instances[i % c.fixed_instances.size()];
}

inline PredictionSettings prediction_settings(const ExperimentConfig& c, const Instance& inst, int i) {
  PredictionSettings s;
  s.predictor = c.predictor;
  if (!c.tolerance_given) s.predictor.tolerance = inst.config.epsilon / 10.0;
  s.predictor.rng_seed = predictor_seed(c.seed, i);
  s.predictor.workers = 1;
  s.epe_kappa = c.epe_kappa;
  s.epe_iters = c.epe_iters;
  return s;
}

struct SeatRecord {
  std::string strategy;
  Money utility = 0.0;
  int items_won = 0;
  Money spend = 0.0;
};

struct PlayRecord {
  int instance = 0;
  int profile = 0;
  int rounds = 0;
  int sold = 0;
  int missed = 0;  // unsold items some bidder could still afford and would gain from
  std::vector<SeatRecord> seats;
};

// An item is missed when it closes unsold although some bidder, given what it
// won, values it above the opening raise and can still afford that raise.
inline int count_missed_items(const Outcome& out, std::span<const BidderProfile> profiles, Money epsilon) {
  int missed = 0;
  for (std::size_t j = 0; j < out.final_allocation.size(); ++j) {
    if (out.final_allocation[j] != kAuctioneer) continue;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      const ItemSet w = out.won_by(static_cast<int>(i));
      Ticks paid = 0;
      for (int k : to_items(w)) paid += out.closing_prices[k];
      const Money marginal = profiles[i].values(w | singleton(static_cast<int>(j))) - profiles[i].values(w);
      if (marginal > epsilon + kMoneyTolerance && profiles[i].budget - paid * epsilon >= epsilon - kMoneyTolerance) {
        ++missed;
        break;
      }
    }
  }
  return missed;
}

inline PlayRecord play_cell(const ExperimentConfig& c, const StrategyRegistry& registry, const Instance& inst,
                            PredictionCache& cache, int i, int k) {
  const int n = inst.config.n_bidders;
  std::vector<std::unique_ptr<Strategy>> owned;
  std::vector<Strategy*> seats;
  for (int s = 0; s < n; ++s) {
    const auto& spec = c.spec(c.profiles[k][s]);
    owned.push_back(registry.create(spec.type, {inst, spec.params, cache, seat_seed(c.seed, i, k, s)}));
    seats.push_back(owned.back().get());
  }
  Rng rng = make_rng(cell_seed(c.seed, i, k));
  const Outcome out = play_out(inst.config, inst.profiles, seats, rng);
  PlayRecord rec{i, k, out.rounds_played, 0, count_missed_items(out, inst.profiles, inst.config.epsilon), {}};
  for (int who : out.final_allocation)
    if (who != kAuctioneer) ++rec.sold;
  for (int s = 0; s < n; ++s) {
    const ItemSet w = out.won_by(s);
    Ticks paid = 0;
    for (int j : to_items(w)) paid += out.closing_prices[j];
    rec.seats.push_back({c.profiles[k][s], out.utilities[s], item_count(w), paid * inst.config.epsilon});
  }
  return rec;
}

inline constexpr const char* kPlaysHeader = "instance,profile,seat,strategy,utility,items_won,spend,rounds,sold,missed";

inline std::string play_rows(const PlayRecord& r) {
  std::string out;
  for (std::size_t s = 0; s < r.seats.size(); ++s) {
    const auto& seat = r.seats[s];
    out += std::to_string(r.instance) + ',' + std::to_string(r.profile) + ',' + std::to_string(s) + ',' +
           seat.strategy + ',' + format_money(seat.utility) + ',' + std::to_string(seat.items_won) + ',' +
           format_money(seat.spend) + ',' + std::to_string(r.rounds) + ',' + std::to_string(r.sold) + ',' +
           std::to_string(r.missed) + '\n';
  }
  return out;
}

// Parses plays.csv. Rows of one play are consecutive; a trailing partial play
// (interrupted write) is dropped.
inline std::vector<PlayRecord> parse_plays(const std::string& text, int n_bidders) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kPlaysHeader) throw ConfigError("plays.csv: missing or unexpected header");
  std::vector<PlayRecord> out;
  PlayRecord cur;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 10) break;
    try {
      const int inst = std::stoi(f[0]), prof = std::stoi(f[1]), seat = std::stoi(f[2]);
      if (seat != static_cast<int>(cur.seats.size())) break;
      if (seat == 0) cur = PlayRecord{inst, prof, std::stoi(f[7]), std::stoi(f[8]), std::stoi(f[9]), {}};
      cur.seats.push_back({f[3], std::stod(f[4]), std::stoi(f[5]), std::stod(f[6])});
    } catch (const std::exception&) {
      break;
    }
    if (static_cast<int>(cur.seats.size()) == n_bidders) {
      out.push_back(std::move(cur));
      cur = PlayRecord{};
    }
  }
  return out;
}

struct MetricsRow {
  int profile = 0;
  std::string label;
  std::string strategy;
  MetricsReport report;
  double allocation_ratio = 1.0;  // sold / (sold + missed) over the profile's plays
};

struct Aggregate {
  std::vector<MetricsRow> rows;
  std::optional<EmpiricalGame> game;
};

inline Aggregate aggregate(const ExperimentConfig& c, std::span<const PlayRecord> plays) {
  Aggregate agg;
  const int m = c.m_items();
  for (int k = 0; k < static_cast<int>(c.profiles.size()); ++k) {
    std::vector<std::string> aliases;
    for (const auto& a : c.profiles[k])
      if (std::find(aliases.begin(), aliases.end(), a) == aliases.end()) aliases.push_back(a);
    long sold = 0, missed = 0;
    for (const auto& p : plays)
      if (p.profile == k) sold += p.sold, missed += p.missed;
    for (const auto& alias : aliases) {
      std::vector<double> u, spend;
      std::vector<int> won;
      for (const auto& p : plays) {
        if (p.profile != k) continue;
        for (const auto& s : p.seats)
          if (s.strategy == alias) {
            u.push_back(s.utility);
            won.push_back(s.items_won);
            spend.push_back(s.spend);
          }
      }
      if (u.empty()) continue;
      MetricsRow row{k, c.profile_label(k), alias, compute_metrics(u, won, spend, m), 1.0};
      if (sold + missed > 0) row.allocation_ratio = static_cast<double>(sold) / static_cast<double>(sold + missed);
      agg.rows.push_back(std::move(row));
    }
  }
  if (c.game) {
    std::vector<ProfilePlay> pp;
    for (const auto& p : plays) {
      ProfilePlay x{p.profile, {}};
      for (const auto& s : p.seats) x.seat_utilities.push_back(s.utility);
      pp.push_back(std::move(x));
    }
    agg.game = empirical_game_from_plays(c.game->first, c.game->second, c.n_bidders(), pp);
  }
  return agg;
}

inline const MetricsRow* find_row(const Aggregate& agg, int profile, const std::string& strategy) {
  for (const auto& r : agg.rows)
    if (r.profile == profile && r.strategy == strategy) return &r;
  return nullptr;
}

inline std::string metrics_csv(const Aggregate& agg) {
  std::string out =
      "profile,label,strategy,samples,expected_utility,positive_part,exposure_frequency,expected_exposure,"
      "avg_price_per_item_won,ratio_items_won,allocation_ratio\n";
  for (const auto& r : agg.rows) {
    const auto& m = r.report;
    out += std::to_string(r.profile) + ',' + r.label + ',' + r.strategy + ',' + std::to_string(m.sample_count) + ',' +
           format_money(m.expected_utility) + ',' + format_money(m.positive_part) + ',' +
           format_money(m.exposure_frequency) + ',' + format_money(m.expected_exposure) + ',' +
           (m.avg_price_per_item_won ? format_money(*m.avg_price_per_item_won) : std::string()) + ',' +
           format_money(m.ratio_items_won) + ',' + format_money(r.allocation_ratio) + '\n';
  }
  return out;
}

inline nlohmann::json game_to_json(const EmpiricalGame& g) {
  nlohmann::json profiles = nlohmann::json::array();
  for (int k = 0; k <= g.n_players; ++k) {
    nlohmann::json p{{"a_count", k}, {"plays", g.plays[k]}, {"seat_utility", g.seat_utility[k]}};
    if (g.plays[k] > 0) {
      if (k > 0) p["utility_a"] = g.utility_a(k);
      if (k < g.n_players) p["utility_b"] = g.utility_b(k);
    }
    profiles.push_back(std::move(p));
  }
  nlohmann::json dev = nlohmann::json::array();
  for (int k = 0; k < g.n_players; ++k)
    if (g.plays[k] > 0 && g.plays[k + 1] > 0) dev.push_back({{"from_a_count", k}, {"gain", deviation_gain(g, k)}});
  return {{"a", g.strategy_a}, {"b", g.strategy_b}, {"n", g.n_players}, {"profiles", profiles}, {"deviations", dev}};
}

// Settings that change results. Output location, workers and the instance
// count may differ between a run and its resumption.
inline nlohmann::json result_identity(const nlohmann::json& snapshot) {
  nlohmann::json id = snapshot;
  id.erase("output");
  id.erase("workers");
  if (id.contains("instances")) id["instances"].erase("count");
  return id;
}

struct TournamentResult {
  std::vector<PlayRecord> plays;
  Aggregate aggregate;
  int newly_played_instances = 0;
};

using ProgressFn = std::function<void(int done, int total)>;

inline void write_outputs(const ExperimentConfig& c, const std::filesystem::path& out, const Aggregate& agg,
                          int completed) {
  write_file(out / "metrics.csv", metrics_csv(agg));
  if (agg.game) write_file(out / "game.json", game_to_json(*agg.game).dump(2) + "\n");
  nlohmann::json manifest{{"tool", "saa_experiment"},
                          {"version", kToolVersion},
                          {"config", c.snapshot},
                          {"master_seed", c.seed},
                          {"seed_paths",
                           {{"instance", "derive(master, [0, i])"},
                            {"ties", "derive(master, [1, i, profile])"},
                            {"strategy", "derive(master, [2, i, profile, seat])"},
                            {"predictor", "derive(master, [3, i])"}}},
                          {"completed_instances", completed}};
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
}

inline void ensure_writable(const std::filesystem::path& out) {
  if (out.empty()) throw ConfigError("no output directory given");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec || !std::filesystem::is_directory(out)) throw ConfigError("cannot create output directory " + out.string());
  const auto probe = out / ".write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("output directory is not writable: " + out.string());
  }
  std::filesystem::remove(probe, ec);
}

// Plays every profile on instances [done, count) and appends them to
// out/plays.csv in instance order. Existing complete rows are kept, so an
// interrupted run resumes where it stopped.
inline TournamentResult run_tournament(const ExperimentConfig& c, const std::filesystem::path& out,
                                       const StrategyRegistry& registry = default_registry(),
                                       const ProgressFn& progress = {}) {
  ensure_writable(out);
  const int n = c.n_bidders();
  const int profiles = static_cast<int>(c.profiles.size());
  const auto plays_path = out / "plays.csv";
  const auto manifest_path = out / "manifest.json";

  TournamentResult result;
  if (std::filesystem::exists(plays_path)) {
    if (!std::filesystem::exists(manifest_path)) throw ConfigError("archive has plays but no manifest");
    const auto manifest = nlohmann::json::parse(read_file(manifest_path));
    if (result_identity(manifest.at("config")) != result_identity(c.snapshot))
      throw ConfigError("archive in " + out.string() + " was produced by a different configuration");
    auto plays = parse_plays(read_file(plays_path), n);
    // Keep whole instances only.
    std::size_t keep = 0;
    for (std::size_t k = 0; k < plays.size(); ++k) {
      const auto& p = plays[k];
      if (p.instance != static_cast<int>(k) / profiles || p.profile != static_cast<int>(k) % profiles) break;
      if ((k + 1) % profiles == 0) keep = k + 1;
    }
    plays.resize(keep);
    result.plays = std::move(plays);
  }
  const int done = static_cast<int>(result.plays.size()) / profiles;
  if (done >= c.instance_count) {
    result.aggregate = aggregate(c, result.plays);
    return result;
  }

  {
    std::string text = std::string(kPlaysHeader) + "\n";
    for (const auto& p : result.plays) text += play_rows(p);
    write_file(plays_path, text);
  }
  std::ofstream plays_out(plays_path, std::ios::binary | std::ios::app);
  if (!plays_out) throw ConfigError("cannot append to " + plays_path.string());

  std::mutex commit_mutex;
  std::map<int, std::vector<PlayRecord>> pending;
  int next_commit = done;
  const int todo = c.instance_count - done;
  parallel_for(todo, c.workers, [&](int t) {
    const int i = done + t;
    const Instance inst = make_instance(c, i);
    PredictionCache cache(inst, prediction_settings(c, inst, i));
    std::vector<PlayRecord> recs;
    for (int k = 0; k < profiles; ++k) recs.push_back(play_cell(c, registry, inst, cache, i, k));
    std::lock_guard lock(commit_mutex);
    pending.emplace(i, std::move(recs));
    while (!pending.empty() && pending.begin()->first == next_commit) {
      for (auto& r : pending.begin()->second) {
        plays_out << play_rows(r);
        result.plays.push_back(std::move(r));
      }
      plays_out.flush();
      pending.erase(pending.begin());
      ++next_commit;
      if (progress) progress(next_commit, c.instance_count);
    }
  });
  plays_out.close();
  result.newly_played_instances = todo;
  result.aggregate = aggregate(c, result.plays);
  write_outputs(c, out, result.aggregate, c.instance_count);
  return result;
}

// Grid: {"ALIAS.param": [v1, v2, ...], ...}; the cartesian product is swept.
struct SweepPoint {
  nlohmann::json assignment;  // {"ALIAS.param": value}
  std::filesystem::path dir;
  TournamentResult result;
};

inline std::vector<nlohmann::json> grid_points(const nlohmann::json& grid) {
  if (!grid.is_object() || grid.empty()) throw ConfigError("sweep grid must be a non-empty object");
  std::vector<nlohmann::json> points{nlohmann::json::object()};
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) throw ConfigError("sweep values for '" + key + "' must be a non-empty array");
    std::vector<nlohmann::json> next;
    for (const auto& p : points)
      for (const auto& v : values) {
        auto q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

inline nlohmann::json apply_assignment(nlohmann::json base, const nlohmann::json& assignment) {
  for (const auto& [key, value] : assignment.items()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ConfigError("sweep key '" + key + "' must look like ALIAS.param");
    const auto alias = key.substr(0, dot), param = key.substr(dot + 1);
    if (!base.contains("strategies") || !base["strategies"].contains(alias))
      throw ConfigError("sweep key '" + key + "' names an undeclared strategy");
    base["strategies"][alias][param] = value;
  }
  return base;
}

// One tournament per grid point in out/point-<k>. Every point reuses the base
// master seed, so instances and chance streams are shared across points.
inline std::vector<SweepPoint> run_sweep(const nlohmann::json& base, const nlohmann::json& grid,
                                         const std::filesystem::path& out, const std::filesystem::path& base_dir = {},
                                         const StrategyRegistry& registry = default_registry(),
                                         const ProgressFn& progress = {}) {
  const auto points = grid_points(grid);
  std::vector<ExperimentConfig> configs;
  for (const auto& a : points) configs.push_back(parse_experiment_config(apply_assignment(base, a), base_dir, registry));
  ensure_writable(out);
  std::vector<SweepPoint> results;
  nlohmann::json summary = nlohmann::json::array();
  std::string csv = "point,assignment,profile,label,strategy,samples,expected_utility,exposure_frequency,"
                    "expected_exposure,ratio_items_won,allocation_ratio\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    SweepPoint sp{points[k], out / ("point-" + std::to_string(k)), {}};
    sp.result = run_tournament(configs[k], sp.dir, registry, progress);
    summary.push_back({{"point", k}, {"assignment", points[k]}, {"dir", sp.dir.filename().string()}});
    for (const auto& r : sp.result.aggregate.rows) {
      std::string a;
      for (char ch : points[k].dump()) {
        if (ch == '"') a += '"';
        a += ch;
      }
      csv += std::to_string(k) + ",\"" + a + "\","+ std::to_string(r.profile) + ',' + r.label + ',' + r.strategy +
             ',' + std::to_string(r.report.sample_count) + ',' + format_money(r.report.expected_utility) + ',' +
             format_money(r.report.exposure_frequency) + ',' + format_money(r.report.expected_exposure) + ',' +
             format_money(r.report.ratio_items_won) + ',' + format_money(r.allocation_ratio) + '\n';
    }
    results.push_back(std::move(sp));
  }
  write_file(out / "sweep.json", nlohmann::json{{"grid", grid}, {"base", base}, {"points", summary}}.dump(2) + "\n");
  write_file(out / "sweep.csv", csv);
  return results;
}

// Rebuilds metrics.csv (and game.json) from an archive's plays and manifest.
inline Aggregate report_archive(const std::filesystem::path& dir, const StrategyRegistry& registry = default_registry()) {
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  const auto c = parse_experiment_config(manifest.at("config"), dir, registry);
  const auto plays = parse_plays(read_file(dir / "plays.csv"), c.n_bidders());
  auto agg = aggregate(c, plays);
  write_file(dir / "metrics.csv", metrics_csv(agg));
  if (agg.game) write_file(dir / "game.json", game_to_json(*agg.game).dump(2) + "\n");
  return agg;
}

inline void generate_instances(const ExperimentConfig& c, const std::filesystem::path& out) {
  ensure_writable(out);
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < c.instance_count; ++i) arr.push_back(instance_to_json(make_instance(c, i)));
  write_file(out / "instances.json", arr.dump(1) + "\n");
}

// Runs the fixed-point predictor on every instance; one convergence trace per
// instance plus a p* summary.
inline std::vector<PredictionResult> predict_instances(const ExperimentConfig& c, const std::filesystem::path& out,
                                                       const ProgressFn& progress = {}) {
  ensure_writable(out);
  std::vector<PredictionResult> res(c.instance_count);
  std::mutex mu;
  int finished = 0;
  parallel_for(c.instance_count, c.workers, [&](int i) {
    const Instance inst = make_instance(c, i);
    res[i] = iterate_prediction(inst, prediction_settings(c, inst, i).predictor);
    write_file(out / ("trace-" + std::to_string(i) + ".csv"), trace_to_csv(res[i].trace));
    std::lock_guard lock(mu);
    if (progress) progress(++finished, c.instance_count);
  });
  std::string csv = "instance,iterations,converged";
  for (int j = 0; j < c.m_items(); ++j) csv += ",p" + std::to_string(j);
  csv += '\n';
  for (int i = 0; i < c.instance_count; ++i) {
    csv += std::to_string(i) + ',' + std::to_string(res[i].trace.iterates.size() - 1) + ',' +
           (res[i].trace.converged ? "1" : "0");
    for (Money p : res[i].p_star) csv += ',' + format_money(p);
    csv += '\n';
  }
  write_file(out / "predictions.csv", csv);
  return res;
}

}  // namespace saac
