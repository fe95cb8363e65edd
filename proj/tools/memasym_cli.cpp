#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "memasym/experiments.hpp"
#include "memasym/game.hpp"
#include "memasym/verification.hpp"

namespace {

using namespace memasym;

constexpr int kViolation = 1;
constexpr int kConfigError = 2;

nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct Overrides {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::string field;
  int workers = -1;

  void apply(ExperimentConfig& cfg) const {
    if (!out.empty()) cfg.output_path = out;
    if (seed) cfg.initial.seed = *seed;
    if (dt) cfg.integrator.dt = *dt;
    if (horizon) cfg.integrator.horizon = *horizon;
    if (!field.empty()) cfg.field = field_kind_from_string(field);
    if (workers >= 0) cfg.workers = workers;
  }
};

void print_vector(const char* name, const Vector& v) {
  std::printf("%s = (", name);
  for (int k = 0; k < v.size(); ++k) std::printf(k ? ", %.6g" : "%.6g", v(k));
  std::printf(")\n");
}

int report(const ExperimentResult& res) {
  const auto& cfg = res.config;
  std::printf("experiment %s: %s field, game %s, %zu trajectories, dt %g, horizon %g\n",
              cfg.name.c_str(), to_string(cfg.field).c_str(),
              cfg.game.variant().value_or("inline").c_str(), res.runs.size(),
              cfg.integrator.dt, cfg.integrator.horizon);
  if (cfg.initial.states.empty())
    std::printf("initial-condition seed %llu\n",
                static_cast<unsigned long long>(cfg.initial.seed));
  print_vector("x*", res.equilibrium.x_star);
  print_vector("y*", res.equilibrium.y_star);
  std::printf("value %.6g%s\n", res.equilibrium.value,
              res.segment ? " (equilibrium set is a segment)" : "");
  std::size_t conv_x = 0, aborted = 0;
  for (const auto& r : res.runs) {
    conv_x += r.report.converged_x_st ? 1 : 0;
    aborted += r.error ? 1 : 0;
  }
  if (res.runs.size() <= 20) {
    for (const auto& r : res.runs) {
      std::printf("  #%03zu  dist_y %.3e  dist_x_st %.3e  set %.3e  osc_y %.3e  %s%s\n",
                  r.index, r.report.final_dist_y, r.report.final_dist_x_st,
                  r.report.dist_to_eq_set, r.report.osc_amplitude_y,
                  r.report.converged_y ? "converged" : "not converged",
                  r.error ? " (aborted)" : "");
    }
  }
  std::printf("converged_y %zu/%zu, converged_x_st %zu/%zu, aborted %zu, %.2f s\n",
              res.converged_y_count(), res.runs.size(), conv_x, res.runs.size(), aborted,
              res.seconds);
  if (!cfg.output_path.empty())
    std::printf("wrote %s/summary.json and %zu CSV files\n", cfg.output_path.c_str(),
                res.runs.size());
  return 0;
}

int run_checks(bool acceptance, const std::string& out) {
  using namespace memasym::verify;
  std::vector<std::string> lines;
  AcceptanceOptions opt{out, &lines};
  const auto checks = acceptance ? acceptance_checks(opt) : invariant_checks();
  int failed = 0;
  for (const auto& c : checks) {
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s (%s): %s\n", r.passed ? "PASS" : "FAIL", c.id.c_str(),
                c.title.c_str(), r.detail.c_str());
    for (const auto& l : lines) std::printf("        %s\n", l.c_str());
    lines.clear();
    std::fflush(stdout);
    failed += r.passed ? 0 : 1;
  }
  std::printf("%zu/%zu checks passed\n", checks.size() - failed, checks.size());
  return failed == 0 ? 0 : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning dynamics in zero-sum games with memory asymmetry"};
  app.require_subcommand(1);
  Overrides ov;
  auto add_overrides = [&ov](CLI::App* cmd) {
    cmd->add_option("--out", ov.out, "Output directory for CSV files and summary.json");
    cmd->add_option("--seed", ov.seed, "Initial-condition sampling seed");
    cmd->add_option("--dt", ov.dt, "Integration step");
    cmd->add_option("--horizon", ov.horizon, "Integration horizon");
    cmd->add_option("--field", ov.field, "Learning dynamics")
        ->check(CLI::IsMember({"replicator", "gda"}));
    cmd->add_option("--workers", ov.workers, "Parallel trajectories (0 = all cores)");
  };

  std::string game_path;
  auto* nash = app.add_subcommand("nash", "Solve a game given as JSON");
  nash->add_option("game", game_path, "Game file")->required();

  std::string config_path;
  auto* simulate = app.add_subcommand("simulate", "Run an experiment from a JSON config");
  simulate->add_option("config_file", config_path, "Experiment config file");
  simulate->add_option("--config", config_path, "Experiment config file");
  add_overrides(simulate);

  std::string preset;
  auto* experiment = app.add_subcommand("experiment", "Run a named preset");
  experiment->add_option("preset_name", preset, "mp | mp-gda | cmp-interior | cmp-continuous | cmp-boundary");
  experiment->add_option("--preset", preset, "Preset name");
  add_overrides(experiment);

  bool acceptance = false;
  std::string check_out;
  auto* check = app.add_subcommand("check", "Run the invariant suite");
  check->add_flag("--acceptance", acceptance, "Run the acceptance criteria instead");
  check->add_option("--out", check_out, "Keep preset CSV output here (with --acceptance)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (nash->parsed()) {
      const auto game = game_from_json(read_json(game_path));
      const auto eq = solve_nash(game);
      auto j = to_json(eq);
      if (const auto seg = equilibrium_segment(game, eq)) {
        j["segment"] = {{"base_x", detail::vector_json(seg->base_x)},
                        {"alt_x", detail::vector_json(seg->alt_x)},
                        {"base_y", detail::vector_json(seg->base_y)},
                        {"alt_y", detail::vector_json(seg->alt_y)}};
      }
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (simulate->parsed()) {
      if (config_path.empty()) throw ConfigError("simulate needs a config file");
      auto cfg = experiment_from_json(read_json(config_path));
      ov.apply(cfg);
      return report(run_experiment(cfg));
    }
    if (experiment->parsed()) {
      if (preset.empty()) throw ConfigError("experiment needs a preset name");
      auto cfg = preset_config(preset);
      cfg.output_path = "out/" + preset;
      ov.apply(cfg);
      return report(run_experiment(cfg));
    }
    if (check->parsed()) return run_checks(acceptance, check_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kViolation;
  }
  return 0;
}
