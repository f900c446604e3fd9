// Batch experiments: instance generation, p* traces, tournaments, sweeps and
// archive reports. See README.md for the config schema.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "saac/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> count;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", c.output, "output directory (overrides the config)");
  cmd->add_option("--seed", c.seed, "master seed override");
  cmd->add_option("-w,--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("-n,--count", c.count, "instance count override")->check(CLI::PositiveNumber);
  cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

nlohmann::json load_doc(const Common& c) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(saac::read_file(c.config));
  } catch (const nlohmann::json::parse_error& e) {
    throw saac::ConfigError("cannot parse " + c.config + ": " + e.what());
  }
  if (c.seed) j["seed"] = *c.seed;
  if (c.workers) j["workers"] = *c.workers;
  if (c.count) j["instances"]["count"] = *c.count;
  if (!c.output.empty()) j["output"] = c.output;
  return j;
}

std::filesystem::path base_dir(const Common& c) { return std::filesystem::path(c.config).parent_path(); }

std::filesystem::path output_of(const saac::ExperimentConfig& cfg) {
  if (cfg.output.empty()) throw saac::ConfigError("no output directory (set \"output\" or pass -o)");
  return cfg.output;
}

saac::ProgressFn progress_printer(bool quiet, const char* what) {
  if (quiet) return {};
  return [what](int done, int total) { std::fprintf(stderr, "\r%s %d/%d", what, done, total); if (done == total) std::fputc('\n', stderr); };
}

void print_metrics(const saac::Aggregate& agg) {
  std::printf("%-8s %-20s %-10s %8s %10s %10s %10s %10s\n", "profile", "label", "strategy", "samples", "E[u]",
              "exp.freq", "E[exp]", "alloc");
  for (const auto& r : agg.rows)
    std::printf("%-8d %-20s %-10s %8ld %10.4f %10.4f %10.4f %10.4f\n", r.profile, r.label.c_str(), r.strategy.c_str(),
                r.report.sample_count, r.report.expected_utility, r.report.exposure_frequency,
                r.report.expected_exposure, r.allocation_ratio);
  if (agg.game) {
    const auto& g = *agg.game;
    for (int k = 0; k < g.n_players; ++k)
      if (g.plays[k] > 0 && g.plays[k + 1] > 0)
        std::printf("deviation %s->%s at %d x %s: gain %+.4f\n", g.strategy_b.c_str(), g.strategy_a.c_str(), k,
                    g.strategy_a.c_str(), saac::deviation_gain(g, k));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAA-c batch experiment runner"};
  app.require_subcommand(1);

  Common gen, pred, tour, sweep;
  auto* cmd_gen = app.add_subcommand("generate", "write the configured instances to instances.json");
  add_common(cmd_gen, gen);
  auto* cmd_pred = app.add_subcommand("predict", "run the fixed-point predictor and write convergence traces");
  add_common(cmd_pred, pred);
  auto* cmd_tour = app.add_subcommand("tournament", "play every profile on every instance (resumable)");
  add_common(cmd_tour, tour);
  auto* cmd_sweep = app.add_subcommand("sweep", "one tournament per grid point");
  add_common(cmd_sweep, sweep);
  std::string grid_arg;
  cmd_sweep->add_option("-g,--grid", grid_arg, "grid as JSON text or a JSON file (default: the config's \"sweep\")");
  std::string report_dir;
  auto* cmd_report = app.add_subcommand("report", "rebuild metric tables from an archive");
  cmd_report->add_option("-d,--dir", report_dir, "archive directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_gen) {
      const auto cfg = saac::parse_experiment_config(load_doc(gen), base_dir(gen));
      saac::generate_instances(cfg, output_of(cfg));
      std::printf("wrote %d instances to %s\n", cfg.instance_count, (output_of(cfg) / "instances.json").c_str());
    } else if (*cmd_pred) {
      const auto cfg = saac::parse_experiment_config(load_doc(pred), base_dir(pred));
      const auto res = saac::predict_instances(cfg, output_of(cfg), progress_printer(pred.quiet, "predict"));
      int converged = 0;
      for (const auto& r : res) converged += r.trace.converged;
      std::printf("%d/%zu predictions converged; traces in %s\n", converged, res.size(), output_of(cfg).c_str());
    } else if (*cmd_tour) {
      const auto cfg = saac::parse_experiment_config(load_doc(tour), base_dir(tour));
      const auto res = saac::run_tournament(cfg, output_of(cfg), saac::default_registry(),
                                            progress_printer(tour.quiet, "instances"));
      if (res.newly_played_instances == 0) std::printf("archive already complete; nothing to do\n");
      print_metrics(res.aggregate);
    } else if (*cmd_sweep) {
      auto doc = load_doc(sweep);
      nlohmann::json grid;
      if (!grid_arg.empty()) {
        grid = std::filesystem::exists(grid_arg) ? nlohmann::json::parse(saac::read_file(grid_arg))
                                                 : nlohmann::json::parse(grid_arg);
      } else if (doc.contains("sweep")) {
        grid = doc.at("sweep");
      } else {
        throw saac::ConfigError("sweep needs a grid (--grid or a \"sweep\" section)");
      }
      doc.erase("sweep");
      if (!doc.contains("output")) throw saac::ConfigError("no output directory (set \"output\" or pass -o)");
      const std::filesystem::path out = doc.at("output").get<std::string>();
      const auto points = saac::run_sweep(doc, grid, out, base_dir(sweep), saac::default_registry(),
                                          progress_printer(sweep.quiet, "instances"));
      for (const auto& p : points) {
        std::printf("== %s (%s)\n", p.assignment.dump().c_str(), p.dir.c_str());
        print_metrics(p.result.aggregate);
      }
    } else if (*cmd_report) {
      print_metrics(saac::report_archive(report_dir));
    }
  } catch (const saac::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
