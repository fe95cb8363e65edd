#ifndef MEMASYM_EXPERIMENTS_HPP
#define MEMASYM_EXPERIMENTS_HPP

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "memasym/convergence.hpp"
#include "memasym/diagnostics.hpp"
#include "memasym/dynamics.hpp"
#include "memasym/error.hpp"
#include "memasym/game.hpp"
#include "memasym/linalg.hpp"
#include "memasym/rng.hpp"
#include "memasym/strategy.hpp"

namespace memasym {

struct ProbeSpec {
  std::string label;
  // Exactly one of the two is set: an explicit zero-sum direction, or a
  // strategy x turned into delta = x - x* once x* is known.
  std::optional<Vector> delta;
  std::optional<Vector> strategy;
};

struct InitialConditions {
  std::vector<JointState> states;  // used when non-empty
  int count = 0;
  std::uint64_t seed = 1;
  double floor = 0.01;
};

struct ExperimentConfig {
  std::string name = "custom";
  PayoffMatrix game = make_matching_pennies();
  FieldKind field = FieldKind::Replicator;
  IntegratorConfig integrator;
  InitialConditions initial;
  std::vector<ProbeSpec> probes;
  bool default_probes = true;
  std::string output_path;  // directory; empty disables file output
  double tol = 1e-3;
  double window_frac = 0.1;
  int workers = 0;  // 0 = one per hardware thread

  std::size_t trajectory_count() const {
    return initial.states.empty() ? static_cast<std::size_t>(initial.count)
                                  : initial.states.size();
  }

  void validate() const {
    integrator.validate(std::max(game.rows(), game.cols()));
    if (trajectory_count() == 0)
      throw ConfigError("at least one initial condition is required");
    if (initial.states.empty() &&
        !(initial.floor >= 0.0 &&
          initial.floor * std::max(game.rows(), game.cols()) < 1.0))
      throw ConfigError("initial floor must lie in [0, 1/max(m_X, m_Y))");
    for (const auto& s : initial.states)
      if (!s.fits(game)) throw ConfigError("initial state does not fit the game");
    for (const auto& p : probes) {
      if (p.delta.has_value() == p.strategy.has_value())
        throw ConfigError("probe '" + p.label + "' needs exactly one of delta/strategy");
      const auto& v = p.delta ? *p.delta : *p.strategy;
      if (v.size() != game.rows())
        throw ConfigError("probe '" + p.label + "' has the wrong length");
      if (p.delta) {
        try {
          ZeroSumVector check(*p.delta);
        } catch (const Error& e) {
          throw ConfigError("probe '" + p.label + "': " + e.what());
        }
      }
    }
    if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
    if (!(window_frac > 0.0 && window_frac <= 1.0))
      throw ConfigError("window_frac must lie in (0, 1]");
    if (workers < 0) throw ConfigError("workers must be >= 0");
  }
};

// --- JSON configuration ------------------------------------------------------

namespace detail {

inline Vector json_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxActions))
    throw ConfigError("vector length out of range");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k];
  return out;
}

inline nlohmann::json vector_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline JointState state_from_json(const nlohmann::json& j) {
  // X is given as a list of columns x_{.|j}.
  const auto& cols = j.at("X");
  if (!cols.is_array() || cols.empty() || cols.size() > kMaxActions)
    throw ConfigError("state: X must be a non-empty list of columns");
  const Vector first = json_vector(cols[0]);
  Matrix X(first.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Vector col = json_vector(cols[c]);
    if (col.size() != first.size()) throw ConfigError("state: ragged X columns");
    X.col(static_cast<Eigen::Index>(c)) = col;
  }
  try {
    return JointState(ReactiveStrategy(X), MixedStrategy(json_vector(j.at("y"))));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("state: ") + e.what());
  }
}

}  // namespace detail

/// {"generator": name, "seed": n} for the built-in games, or an inline
/// payoff object {"rows", "cols", "entries", ...}.
inline PayoffMatrix game_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("game must be a JSON object");
  if (!j.contains("generator")) return payoff_from_json(j);
  const auto name = j.at("generator").get<std::string>();
  const auto seed = j.value("seed", std::uint64_t{1});
  if (name == "matching-pennies") return make_matching_pennies();
  for (auto v : {CoupledVariant::Interior, CoupledVariant::Continuous,
                 CoupledVariant::Boundary})
    if (name == variant_name(v)) return make_coupled_matching_pennies(v, seed);
  throw ConfigError("unknown game generator '" + name + "'");
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    cfg.name = j.value("name", cfg.name);
    cfg.game = game_from_json(j.at("game"));
    if (j.contains("integrator")) {
      const auto spec = integrator_from_json(j["integrator"]);
      cfg.integrator = spec.config;
      cfg.field = spec.field;
    }
    if (j.contains("field"))
      cfg.field = field_kind_from_string(j["field"].get<std::string>());
    const auto& ic = j.at("initial_conditions");
    if (ic.contains("states")) {
      for (const auto& s : ic["states"]) cfg.initial.states.push_back(detail::state_from_json(s));
    } else {
      cfg.initial.count = ic.at("count").get<int>();
      cfg.initial.seed = ic.value("seed", cfg.initial.seed);
      cfg.initial.floor = ic.value("floor", cfg.initial.floor);
    }
    if (j.contains("probes")) {
      for (const auto& p : j["probes"]) {
        ProbeSpec spec;
        spec.label = p.at("label").get<std::string>();
        if (p.contains("delta")) spec.delta = detail::json_vector(p["delta"]);
        if (p.contains("strategy")) spec.strategy = detail::json_vector(p["strategy"]);
        cfg.probes.push_back(std::move(spec));
      }
    }
    cfg.default_probes = j.value("default_probes", cfg.default_probes);
    cfg.output_path = j.value("output_path", cfg.output_path);
    cfg.tol = j.value("tol", cfg.tol);
    cfg.window_frac = j.value("window_frac", cfg.window_frac);
    cfg.workers = j.value("workers", cfg.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

// --- presets ------------------------------------------------------------------

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"mp", "mp-gda", "cmp-interior",
                                                 "cmp-continuous", "cmp-boundary"};
  return names;
}

inline ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.integrator.dt = 0.01;
  if (name == "mp" || name == "mp-gda") {
    cfg.game = make_matching_pennies();
    cfg.field = name == "mp" ? FieldKind::Replicator : FieldKind::GradientDescentAscent;
    cfg.integrator.horizon = 500.0;
    cfg.integrator.sample_stride = 100;
    cfg.initial.count = 100;
    cfg.initial.seed = 1;
    cfg.tol = 1e-3;
    cfg.probes.push_back({"x=e1", std::nullopt, make_vector({1.0, 0.0})});
    return cfg;
  }
  std::optional<CoupledVariant> variant;
  if (name == "cmp-interior") variant = CoupledVariant::Interior;
  if (name == "cmp-continuous") variant = CoupledVariant::Continuous;
  if (name == "cmp-boundary") variant = CoupledVariant::Boundary;
  if (!variant) throw ConfigError("unknown preset '" + name + "'");
  cfg.game = make_coupled_matching_pennies(*variant, 1);
  cfg.integrator.horizon = 1000.0;
  cfg.integrator.sample_stride = 10;
  cfg.initial.count = 10;
  cfg.initial.seed = 2;
  cfg.tol = 1e-2;
  return cfg;
}

/// Start states drawn uniformly from the floor-interior, X column by column
/// and then y, from a single stream.
inline std::vector<JointState> initial_states(const ExperimentConfig& cfg) {
  if (!cfg.initial.states.empty()) return cfg.initial.states;
  Rng rng(cfg.initial.seed);
  std::vector<JointState> out;
  const int mx = cfg.game.rows(), my = cfg.game.cols();
  for (int k = 0; k < cfg.initial.count; ++k) {
    Matrix X(mx, my);
    for (int j = 0; j < my; ++j) X.col(j) = rng.simplex_point(mx, cfg.initial.floor);
    Vector y = rng.simplex_point(my, cfg.initial.floor);
    out.emplace_back(ReactiveStrategy(X), MixedStrategy(y));
  }
  return out;
}

inline std::vector<Probe> resolve_probes(const ExperimentConfig& cfg,
                                         const EquilibriumInfo& eq) {
  std::vector<Probe> probes;
  if (cfg.default_probes) probes = default_probes(cfg.game.rows());
  for (const auto& p : cfg.probes) {
    try {
      probes.push_back(p.delta ? Probe{p.label, ZeroSumVector(*p.delta)}
                               : strategy_probe(p.label, *p.strategy, eq));
    } catch (const Error& e) {
      throw ConfigError("probe '" + p.label + "': " + e.what());
    }
  }
  return probes;
}

// --- CSV ----------------------------------------------------------------------

namespace detail {

// Shortest round-trip representation, independent of locale and stream state.
inline void put_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
    return;
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline std::string csv_header(const PayoffMatrix& U, const std::vector<Probe>& probes) {
  std::string h = "t";
  for (int j = 0; j < U.cols(); ++j)
    for (int i = 0; i < U.rows(); ++i)
      h += ",x" + std::to_string(i + 1) + "|" + std::to_string(j + 1);
  for (int j = 0; j < U.cols(); ++j) h += ",y" + std::to_string(j + 1);
  for (int i = 0; i < U.rows(); ++i) h += ",xst" + std::to_string(i + 1);
  h += ",u_st,D,D_rate";
  for (const auto& p : probes) h += ",H_" + p.label + ",Hrate_" + p.label;
  h += ",exploitability,q1,q2,definiteness,clamped";
  return h;
}

inline std::string csv_row(const PayoffMatrix& U, FieldKind kind,
                           const TrajectoryPoint& p, const EquilibriumInfo& eq,
                           const std::vector<Probe>& probes) {
  const DiagnosticsSample s = evaluate_diagnostics(U, kind, p.t, p.X, p.y, eq, probes);
  std::string r;
  auto num = [&r](double v) {
    r += ',';
    detail::put_number(r, v);
  };
  detail::put_number(r, p.t);
  for (int j = 0; j < p.X.cols(); ++j)
    for (int i = 0; i < p.X.rows(); ++i) num(p.X(i, j));
  for (int j = 0; j < p.y.size(); ++j) num(p.y(j));
  const Vector xst = p.X * p.y;
  for (int i = 0; i < xst.size(); ++i) num(xst(i));
  num(xst.dot(U.u() * p.y));
  num(s.D);
  num(s.D_rate);
  for (std::size_t k = 0; k < probes.size(); ++k) {
    num(s.H_values[k].second);
    num(s.H_rates[k].second);
  }
  num(s.exploitability);
  if (s.q) {
    num(s.q->first);
    num(s.q->second);
  } else {
    r += ",,";
  }
  r += ',' + std::to_string(code(s.definiteness.verdict));
  r += p.clamped ? ",1" : ",0";
  return r;
}

inline void write_trajectory_csv(std::ostream& os, const PayoffMatrix& U,
                                 FieldKind kind, const Trajectory& traj,
                                 const EquilibriumInfo& eq,
                                 const std::vector<Probe>& probes) {
  os << csv_header(U, probes) << '\n';
  for (const auto& p : traj.points) os << csv_row(U, kind, p, eq, probes) << '\n';
}

// --- running ------------------------------------------------------------------

struct RunRecord {
  std::size_t index = 0;
  Trajectory trajectory;
  ConvergenceReport report;
  std::optional<std::string> error;  // set when the integration aborted
  // Largest one-step drop of q1 - q2 (replicator field on 2x2 games).
  std::optional<double> max_q_decrease;
  double max_simplex_violation = 0.0;
  std::string csv_file;
};

struct ExperimentResult {
  ExperimentConfig config;
  EquilibriumInfo equilibrium;
  std::optional<EquilibriumSegmentParam> segment;
  std::vector<Probe> probes;
  std::vector<RunRecord> runs;
  double seconds = 0.0;

  std::size_t converged_y_count() const {
    return static_cast<std::size_t>(std::count_if(
        runs.begin(), runs.end(), [](const RunRecord& r) { return r.report.converged_y; }));
  }
};

namespace detail {

inline double simplex_violation(const TrajectoryPoint& p) {
  double v = std::max(0.0, -std::min(p.X.minCoeff(), p.y.minCoeff()));
  for (int j = 0; j < p.X.cols(); ++j) v = std::max(v, std::abs(p.X.col(j).sum() - 1.0));
  return std::max(v, std::abs(p.y.sum() - 1.0));
}

inline RunRecord run_one(const ExperimentConfig& cfg, const EquilibriumInfo& eq,
                         const std::optional<EquilibriumSegmentParam>& seg,
                         const std::vector<Probe>& probes, const JointState& s0,
                         std::size_t index) {
  RunRecord rec;
  rec.index = index;
  std::vector<Observer> observers;
  double prev_gap = std::numeric_limits<double>::quiet_NaN();
  // Under the replicator field q1 - q2 never decreases on 2x2 games.
  if (cfg.field == FieldKind::Replicator && cfg.game.rows() == 2 &&
      cfg.game.cols() == 2) {
    rec.max_q_decrease = 0.0;
    observers.push_back([&](const TrajectoryPoint& p) {
      if (!(p.X.minCoeff() > 0.0 && p.X.maxCoeff() < 1.0)) return;
      const auto [q1, q2] = log_odds_q(p.X);
      if (!std::isnan(prev_gap))
        rec.max_q_decrease = std::max(*rec.max_q_decrease, prev_gap - (q1 - q2));
      prev_gap = q1 - q2;
    });
  }
  try {
    rec.trajectory = integrate(cfg.game, cfg.field, s0, cfg.integrator, observers);
  } catch (const IntegrationAborted& e) {
    rec.error = e.what();
    rec.trajectory.points.push_back(e.last_finite_state());
  }
  for (const auto& p : rec.trajectory.points)
    rec.max_simplex_violation = std::max(rec.max_simplex_violation, simplex_violation(p));
  rec.report = detect_convergence(rec.trajectory, eq, seg, cfg.tol, cfg.window_frac);
  if (rec.error) {
    rec.report.converged_y = false;
    rec.report.converged_x_st = false;
  }

  if (!cfg.output_path.empty()) {
    char name[32];
    std::snprintf(name, sizeof name, "traj_%03zu.csv", index);
    rec.csv_file = name;
    std::ofstream os(std::filesystem::path(cfg.output_path) / name, std::ios::binary);
    if (!os) throw Error("cannot write " + rec.csv_file);
    write_trajectory_csv(os, cfg.game, cfg.field, rec.trajectory, eq, probes);
  }
  return rec;
}

}  // namespace detail

inline nlohmann::json summary_json(const ExperimentResult& res) {
  const auto& cfg = res.config;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : res.runs) {
    nlohmann::json jr = {{"index", r.index},
                         {"report", to_json(r.report)},
                         {"clamped_steps", r.trajectory.clamped_steps},
                         {"max_simplex_violation", r.max_simplex_violation},
                         {"final_y", detail::vector_json(r.trajectory.back().y)}};
    jr["csv"] = r.csv_file.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.csv_file);
    jr["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
    jr["max_q_decrease"] =
        r.max_q_decrease ? nlohmann::json(*r.max_q_decrease) : nlohmann::json(nullptr);
    runs.push_back(std::move(jr));
  }
  nlohmann::json seg = nullptr;
  if (res.segment) {
    seg = {{"base_x", detail::vector_json(res.segment->base_x)},
           {"alt_x", detail::vector_json(res.segment->alt_x)},
           {"base_y", detail::vector_json(res.segment->base_y)},
           {"alt_y", detail::vector_json(res.segment->alt_y)},
           {"r_x", res.segment->r_x},
           {"r_y", res.segment->r_y}};
  }
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : res.probes)
    probes.push_back({{"label", p.label}, {"delta", detail::vector_json(p.delta.values())}});
  nlohmann::json initial = {{"count", cfg.trajectory_count()}};
  if (cfg.initial.states.empty()) {
    initial["seed"] = cfg.initial.seed;
    initial["floor"] = cfg.initial.floor;
  }
  return {{"name", cfg.name},
          {"game", to_json(cfg.game)},
          {"integrator", to_json(IntegratorSpec{cfg.integrator, cfg.field})},
          {"initial_conditions", initial},
          {"tol", cfg.tol},
          {"window_frac", cfg.window_frac},
          {"equilibrium", to_json(res.equilibrium)},
          {"segment", seg},
          {"probes", probes},
          {"converged_y", res.converged_y_count()},
          {"trajectories", res.runs.size()},
          {"runs", runs}};
}

/// Solves the game, integrates every initial condition (in parallel when
/// workers allow), writes one CSV per trajectory plus summary.json, and
/// reports convergence. Aborted integrations are recorded on their run and
/// do not stop the others.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.config = cfg;
  res.equilibrium = solve_nash(cfg.game);
  res.segment = equilibrium_segment(cfg.game, res.equilibrium);
  res.probes = resolve_probes(cfg, res.equilibrium);
  if (!cfg.output_path.empty()) std::filesystem::create_directories(cfg.output_path);

  const auto states = initial_states(cfg);
  res.runs.resize(states.size());
  std::size_t workers = cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, states.size());

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(workers);
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t k; (k = next++) < states.size();)
        res.runs[k] = detail::run_one(cfg, res.equilibrium, res.segment, res.probes,
                                      states[k], k);
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  if (!cfg.output_path.empty()) {
    std::ofstream os(std::filesystem::path(cfg.output_path) / "summary.json");
    os << summary_json(res).dump(2) << '\n';
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace memasym

#endif  // MEMASYM_EXPERIMENTS_HPP
