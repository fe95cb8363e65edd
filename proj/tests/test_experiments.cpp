#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "memasym/experiments.hpp"

using namespace memasym;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("memasym_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Trajectory constant_trajectory(const Matrix& X, const Vector& y, int n) {
  Trajectory t;
  for (int k = 0; k < n; ++k) t.points.push_back({0.1 * k, X, y, false});
  return t;
}

ExperimentConfig small_mp(int count, double horizon) {
  ExperimentConfig cfg = preset_config("mp");
  cfg.initial.count = count;
  cfg.integrator.horizon = horizon;
  cfg.integrator.sample_stride = 10;
  cfg.workers = 1;
  return cfg;
}

}  // namespace

TEST(DetectConvergence, ConstantTrajectoryAtEquilibrium) {
  const auto eq = solve_nash(make_matching_pennies());
  const Matrix X = ReactiveStrategy::memoryless(eq.x_star, 2).probs();
  const auto rep = detect_convergence(constant_trajectory(X, eq.y_star, 20), eq,
                                      std::nullopt, 1e-3, 0.1);
  EXPECT_TRUE(rep.converged_y);
  EXPECT_TRUE(rep.converged_x_st);
  EXPECT_EQ(rep.osc_amplitude_y, 0.0);
  EXPECT_EQ(rep.final_dist_y, 0.0);
  ASSERT_TRUE(rep.time_to_tol.has_value());
  EXPECT_EQ(*rep.time_to_tol, 0.0);
}

TEST(DetectConvergence, MemorylessCyclingIsNotConvergence) {
  const auto U = make_matching_pennies();
  const auto eq = solve_nash(U);
  IntegratorConfig cfg;
  cfg.horizon = 100;
  const auto traj = integrate_memoryless(U, MixedStrategy(make_vector({0.8, 0.2})),
                                         MixedStrategy(make_vector({0.4, 0.6})), cfg);
  const auto rep = detect_convergence(traj, eq, std::nullopt, 1e-3, 0.1);
  EXPECT_FALSE(rep.converged_y);
  EXPECT_GT(rep.osc_amplitude_y, 0.1);
  EXPECT_FALSE(rep.time_to_tol.has_value());
}

TEST(DetectConvergence, SegmentDistance) {
  const auto U = make_coupled_matching_pennies(CoupledVariant::Continuous, 0);
  const auto eq = solve_nash(U);
  const auto seg = equilibrium_segment(U, eq);
  ASSERT_TRUE(seg.has_value());
  const Vector y = make_vector({0.3, 0.2, 0.3, 0.2});  // on the segment, not at y*
  const Matrix X = Matrix::Constant(4, 4, 0.25);
  const auto rep = detect_convergence(constant_trajectory(X, y, 5), eq, seg, 1e-2, 0.1);
  EXPECT_LT(rep.dist_to_eq_set, 1e-9);
  EXPECT_TRUE(rep.converged_y);
  const Vector off = make_vector({0.4, 0.2, 0.2, 0.2});
  EXPECT_NEAR(distance_to_segment(off, *seg), 0.1, 1e-9);
}

TEST(RunExperiment, MatchingPenniesRunsConvergeWithMonotoneQ) {
  auto cfg = small_mp(5, 500);
  cfg.integrator.sample_stride = 1000;
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.runs.size(), 5u);
  EXPECT_EQ(res.converged_y_count(), 5u);
  for (const auto& r : res.runs) {
    EXPECT_LT(r.report.final_dist_y, 1e-3);
    ASSERT_TRUE(r.report.time_to_tol.has_value());
    ASSERT_TRUE(r.max_q_decrease.has_value());
    EXPECT_LE(*r.max_q_decrease, 1e-8);
    EXPECT_LE(r.max_simplex_violation, 1e-6);
  }
}

TEST(RunExperiment, ContinuousStartsReachDifferentEquilibria) {
  auto cfg = preset_config("cmp-continuous");
  cfg.initial.count = 2;
  cfg.integrator.sample_stride = 1000;
  const auto res = run_experiment(cfg);
  ASSERT_TRUE(res.segment.has_value());
  for (const auto& r : res.runs) EXPECT_LT(r.report.dist_to_eq_set, 0.01);
  EXPECT_GT(max_abs(res.runs[0].trajectory.back().y - res.runs[1].trajectory.back().y), 0.05);
}

TEST(RunExperiment, BoundaryXConvergesButYDoesNotReachYStar) {
  auto cfg = preset_config("cmp-boundary");
  cfg.initial.count = 3;
  cfg.integrator.sample_stride = 1000;
  const auto res = run_experiment(cfg);
  for (const auto& r : res.runs) {
    EXPECT_TRUE(r.report.converged_x_st);
    EXPECT_FALSE(r.report.converged_y);
  }
}

TEST(RunExperiment, CsvIsByteIdenticalAcrossRunsAndWorkerCounts) {
  const auto dir = scratch_dir("determinism");
  auto cfg = small_mp(3, 20);
  cfg.output_path = (dir / "a").string();
  const auto a = run_experiment(cfg);
  cfg.output_path = (dir / "b").string();
  cfg.workers = 3;
  const auto b = run_experiment(cfg);
  for (std::size_t k = 0; k < 3; ++k) {
    ASSERT_FALSE(a.runs[k].csv_file.empty());
    EXPECT_EQ(slurp(dir / "a" / a.runs[k].csv_file), slurp(dir / "b" / b.runs[k].csv_file));
  }
  EXPECT_EQ(slurp(dir / "a" / "summary.json"), slurp(dir / "b" / "summary.json"));
  std::filesystem::remove_all(dir);
}

TEST(RunExperiment, CsvSchema) {
  const auto dir = scratch_dir("schema");
  auto cfg = small_mp(1, 1);
  cfg.output_path = dir.string();
  const auto res = run_experiment(cfg);
  std::ifstream is(dir / res.runs[0].csv_file);
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  EXPECT_EQ(header,
            "t,x1|1,x2|1,x1|2,x2|2,y1,y2,xst1,xst2,u_st,D,D_rate,H_d1,Hrate_d1,"
            "H_x=e1,Hrate_x=e1,exploitability,q1,q2,definiteness,clamped");
  EXPECT_EQ(std::count(first.begin(), first.end(), ','),
            std::count(header.begin(), header.end(), ','));
  EXPECT_EQ(first.substr(0, 2), "0,");
  int rows = 1;
  for (std::string line; std::getline(is, line);) ++rows;
  EXPECT_EQ(rows, 11);  // t = 0 and every tenth of the 100 steps
  std::filesystem::remove_all(dir);
}

TEST(RunExperiment, BlankLogOddsForLargerGames) {
  const auto U = make_coupled_matching_pennies(CoupledVariant::Interior, 1);
  const auto eq = solve_nash(U);
  const TrajectoryPoint p{0.0, Matrix::Constant(4, 4, 0.25), Vector::Constant(4, 0.25), false};
  const auto row = csv_row(U, FieldKind::Replicator, p, eq, default_probes(4));
  EXPECT_NE(row.find(",,,"), std::string::npos);
  EXPECT_EQ(row.substr(row.size() - 2), ",0");
}

TEST(ExperimentConfig, ParsesJson) {
  const auto j = nlohmann::json::parse(R"({
    "name": "demo",
    "game": {"generator": "cmp-interior", "seed": 3},
    "integrator": {"dt": 0.02, "horizon": 4, "field": "gda", "sample_stride": 2},
    "initial_conditions": {"states": [{"X": [[0.5, 0.25, 0.25, 0], [0.25, 0.25, 0.25, 0.25],
                                            [0.1, 0.2, 0.3, 0.4], [1, 0, 0, 0]],
                                      "y": [0.25, 0.25, 0.25, 0.25]}]},
    "probes": [{"label": "a", "delta": [1, -1, 0, 0]}, {"label": "b", "strategy": [1, 0, 0, 0]}],
    "tol": 0.01
  })");
  const auto cfg = experiment_from_json(j);
  EXPECT_EQ(cfg.name, "demo");
  EXPECT_EQ(cfg.game.seed(), 3u);
  EXPECT_EQ(cfg.field, FieldKind::GradientDescentAscent);
  EXPECT_EQ(cfg.integrator.dt, 0.02);
  ASSERT_EQ(cfg.initial.states.size(), 1u);
  EXPECT_EQ(cfg.initial.states[0].X(3, 2), 0.4);
  EXPECT_EQ(cfg.probes.size(), 2u);
  EXPECT_EQ(cfg.tol, 0.01);

  const auto inline_game = nlohmann::json::parse(R"({
    "game": {"rows": 2, "cols": 2, "entries": [2, -1, -1, 1]},
    "initial_conditions": {"count": 2, "seed": 9}
  })");
  const auto c2 = experiment_from_json(inline_game);
  EXPECT_EQ(c2.game(0, 0), 2.0);
  EXPECT_EQ(initial_states(c2).size(), 2u);
}

TEST(ExperimentConfig, RejectsInvalid) {
  auto parse = [](const char* text) { return experiment_from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(parse(R"({"game": {"generator": "nope"}, "initial_conditions": {"count": 1}})"),
               ConfigError);
  EXPECT_THROW(parse(R"({"game": {"generator": "matching-pennies"},
                         "initial_conditions": {"count": 0}})"),
               ConfigError);
  EXPECT_THROW(parse(R"({"game": {"generator": "matching-pennies"},
                         "initial_conditions": {"count": 1},
                         "probes": [{"label": "bad", "delta": [1, 1]}]})"),
               ConfigError);
  EXPECT_THROW(parse(R"({"game": {"generator": "matching-pennies"},
                         "initial_conditions": {"states": [{"X": [[0.5, 0.6], [0.5, 0.5]],
                                                           "y": [0.5, 0.5]}]}})"),
               ConfigError);
  EXPECT_THROW(parse(R"({"game": {"generator": "matching-pennies"},
                         "integrator": {"dt": -1}, "initial_conditions": {"count": 1}})"),
               ConfigError);
  EXPECT_THROW(preset_config("figure-9"), ConfigError);
}

TEST(ExperimentConfig, ProbesCheckedBeforeRunning) {
  auto cfg = small_mp(1, 1);
  cfg.probes.push_back({"skew", make_vector({1, 1}), std::nullopt});
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(InitialStates, DeterministicAndInsideTheFloor) {
  auto cfg = small_mp(20, 1);
  const auto a = initial_states(cfg);
  const auto b = initial_states(cfg);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].X.probs(), b[k].X.probs());
    EXPECT_GE(a[k].X.probs().minCoeff(), 0.01);
    EXPECT_GE(a[k].y.probs().minCoeff(), 0.01);
  }
  cfg.initial.seed = 2;
  EXPECT_NE(initial_states(cfg)[0].y.probs(), a[0].y.probs());
}

TEST(Presets, AllNamedPresetsBuild) {
  for (const auto& name : preset_names()) {
    const auto cfg = preset_config(name);
    EXPECT_NO_THROW(cfg.validate()) << name;
  }
  EXPECT_EQ(preset_config("mp").initial.count, 100);
  EXPECT_EQ(preset_config("mp-gda").field, FieldKind::GradientDescentAscent);
}
