#include <gtest/gtest.h>

#include <cmath>

#include "memasym/diagnostics.hpp"
#include "memasym/dynamics.hpp"
#include "memasym/rng.hpp"

using namespace memasym;

namespace {

struct Instance {
  PayoffMatrix U;
  ReactiveStrategy X;
  MixedStrategy y;
};

Instance random_instance(Rng& rng, int mx, int my, double floor = 0.0) {
  Matrix u(mx, my), x(mx, my);
  for (int i = 0; i < mx; ++i)
    for (int j = 0; j < my; ++j) u(i, j) = rng.uniform(-1, 1);
  for (int j = 0; j < my; ++j) x.col(j) = rng.simplex_point(mx, floor);
  return {PayoffMatrix(u), ReactiveStrategy(x), MixedStrategy(rng.simplex_point(my, floor))};
}

ReactiveStrategy two_column(double a, double b) {
  return ReactiveStrategy(make_matrix({{a, b}, {1 - a, 1 - b}}));
}

}  // namespace

TEST(Gradients, MatchingPenniesHandValues) {
  const auto U = make_matching_pennies();
  const auto X = two_column(0.7, 0.2);
  const Matrix g = grad_x(U, X, MixedStrategy(make_vector({1, 0})));
  EXPECT_EQ(g, make_matrix({{1, 0}, {-1, 0}}));
  EXPECT_EQ(grad_x(U, X, MixedStrategy::uniform(2)), Matrix::Zero(2, 2));

  const Vector h = grad_y(U, two_column(1, 1), MixedStrategy::uniform(2));
  EXPECT_EQ(h, make_vector({1, -1}));
  const Vector h_eq = grad_y(U, two_column(0.5, 0.5), MixedStrategy::uniform(2));
  EXPECT_EQ(h_eq, Vector::Zero(2));
  const Vector h_flat = grad_y(U, two_column(0.9, 0.9), MixedStrategy::uniform(2));
  // Memoryless X away from x*: only the first term survives, U^T x = (0.8, -0.8).
  EXPECT_LE(max_abs(h_flat - make_vector({0.8, -0.8})), 1e-15);
}

TEST(Gradients, MatchFiniteDifferences) {
  Rng rng(5);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const auto in = random_instance(rng, 2 + k % 3, 2 + (k / 3) % 3, 0.05);
    const Matrix& u = in.U.u();
    const Matrix& X = in.X.probs();
    const Vector& y = in.y.probs();
    const Matrix gx = grad_x(in.U, in.X, in.y);
    const Vector gy = grad_y(in.U, in.X, in.y);
    for (int i = 0; i < X.rows(); ++i)
      for (int j = 0; j < X.cols(); ++j) {
        Matrix Xp = X, Xm = X;
        Xp(i, j) += h;
        Xm(i, j) -= h;
        const double fd = (kernel::expected_payoff(u, Xp, y) -
                           kernel::expected_payoff(u, Xm, y)) / (2 * h);
        EXPECT_NEAR(fd, gx(i, j), 1e-6);
      }
    for (int j = 0; j < y.size(); ++j) {
      Vector yp = y, ym = y;
      yp(j) += h;
      ym(j) -= h;
      const double fd = (kernel::expected_payoff(u, X, yp) -
                         kernel::expected_payoff(u, X, ym)) / (2 * h);
      EXPECT_NEAR(fd, gy(j), 1e-6);
    }
  }
}

TEST(Fields, TangentToTheSimplex) {
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    const auto in = random_instance(rng, 2 + k % 4, 2 + (k / 4) % 4);
    for (auto kind : {FieldKind::Replicator, FieldKind::GradientDescentAscent}) {
      const auto f = evaluate_field(kind, in.U, in.X, in.y);
      EXPECT_LE(f.dX.colwise().sum().cwiseAbs().maxCoeff(), 1e-14);
      EXPECT_LE(std::abs(f.dy.sum()), 1e-14);
    }
  }
}

TEST(Fields, VanishAtFullSupportEquilibria) {
  for (const auto& U : {make_matching_pennies(),
                        make_coupled_matching_pennies(CoupledVariant::Interior, 1)}) {
    const auto eq = solve_nash(U);
    const auto X = ReactiveStrategy::memoryless(eq.x_star, U.cols());
    const MixedStrategy y(eq.y_star);
    for (auto kind : {FieldKind::Replicator, FieldKind::GradientDescentAscent}) {
      const auto f = evaluate_field(kind, U, X, y);
      EXPECT_LT(f.dX.cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT(max_abs(f.dy), 1e-12);
    }
  }
}

TEST(Fields, TwoActionReplicatorReduction) {
  const auto U = make_matching_pennies();
  const auto X = two_column(0.9, 0.5);
  const MixedStrategy y(make_vector({0.6, 0.4}));
  const auto f = replicator_field(U, X, y);
  const Vector h = grad_y(U, X, y);
  const double reduced = -0.6 * 0.4 * (h(0) - h(1));
  EXPECT_NEAR(f.dy(0), reduced, 1e-15);
  EXPECT_NE(f.dy(0), 0.0);
}

TEST(Fields, GdaIsCentredGradient) {
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    const auto in = random_instance(rng, 3, 4);
    const Matrix g = grad_x(in.U, in.X, in.y);
    const Matrix centred = g.rowwise() - g.colwise().mean();
    EXPECT_LE((gda_field(in.U, in.X, in.y).dX - centred).cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto U = make_matching_pennies();
  EXPECT_EQ(gda_field(U, two_column(0.3, 0.8), MixedStrategy::uniform(2)).dX,
            Matrix::Zero(2, 2));
}

TEST(Fields, DimensionMismatchThrows) {
  const auto U = make_coupled_matching_pennies(CoupledVariant::Continuous, 0);
  EXPECT_THROW(replicator_field(U, two_column(0.5, 0.5), MixedStrategy::uniform(2)),
               DimensionError);
}

TEST(IntegratorConfig, Validation) {
  IntegratorConfig c;
  EXPECT_NO_THROW(c.validate(4));
  c.dt = 0;
  EXPECT_THROW(c.validate(4), ConfigError);
  c = {};
  c.horizon = -1;
  EXPECT_THROW(c.validate(4), ConfigError);
  c = {};
  c.floor_eps = 0.3;
  EXPECT_THROW(c.validate(4), ConfigError);
  c = {};
  c.sample_stride = 0;
  EXPECT_THROW(c.validate(4), ConfigError);
}

TEST(Integrate, MatchingPenniesConvergesFromRandomStart) {
  Rng rng(12);
  const auto U = make_matching_pennies();
  IntegratorConfig cfg;
  cfg.horizon = 500;
  cfg.sample_stride = 1000;
  Matrix x(2, 2);
  x << rng.simplex_point(2, 0.01), rng.simplex_point(2, 0.01);
  const JointState s0(ReactiveStrategy(x), MixedStrategy(rng.simplex_point(2, 0.01)));
  const auto traj = integrate(U, FieldKind::Replicator, s0, cfg);
  EXPECT_LT(max_abs(traj.back().y - make_vector({0.5, 0.5})), 1e-3);
  EXPECT_EQ(traj.steps, 50000u);
  EXPECT_EQ(traj.points.size(), 51u);
  EXPECT_DOUBLE_EQ(traj.back().t, 500.0);
}

TEST(Integrate, ObserversSeeEveryStep) {
  const auto U = make_matching_pennies();
  IntegratorConfig cfg;
  cfg.horizon = 1.0;
  cfg.dt = 0.1;
  cfg.sample_stride = 3;
  int seen = 0;
  const JointState s0(two_column(0.7, 0.2), MixedStrategy(make_vector({0.3, 0.7})));
  const auto traj =
      integrate(U, FieldKind::Replicator, s0, cfg, {[&](const TrajectoryPoint&) { ++seen; }});
  EXPECT_EQ(seen, 11);
  // t = 0, steps 3, 6, 9 and the final step 10.
  EXPECT_EQ(traj.points.size(), 5u);
  EXPECT_NEAR(traj.back().t, 1.0, 1e-15);
}

TEST(Integrate, HalvingTheStepShrinksTheErrorSixteenfold) {
  const auto U = make_matching_pennies();
  const JointState s0(two_column(0.8, 0.15), MixedStrategy(make_vector({0.9, 0.1})));
  auto run = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.horizon = 10;
    cfg.floor_eps = 0;
    cfg.sample_stride = 1 << 30;
    const auto& p = integrate(U, FieldKind::Replicator, s0, cfg).back();
    Vector z(6);
    z << p.X.reshaped(), p.y;
    return z;
  };
  const Vector ref = run(0.05 / 32);
  const double ratio = (run(0.1) - ref).norm() / (run(0.05) - ref).norm();
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(Integrate, ClampingKeepsProbabilitiesAboveTheFloor) {
  const auto U = make_coupled_matching_pennies(CoupledVariant::Boundary, 0);
  IntegratorConfig cfg;
  cfg.horizon = 200;
  cfg.floor_eps = 0.05;
  cfg.sample_stride = 100;
  const JointState s0(ReactiveStrategy(Matrix::Constant(4, 4, 0.25)),
                      MixedStrategy::uniform(4));
  const auto traj = integrate(U, FieldKind::Replicator, s0, cfg);
  EXPECT_GT(traj.clamped_steps, 0);
  for (const auto& p : traj.points) {
    EXPECT_GE(p.X.minCoeff(), 0.05);
    EXPECT_GE(p.y.minCoeff(), 0.05);
    EXPECT_LE((p.X.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  }
}

TEST(Integrate, NonFiniteStateAborts) {
  const PayoffMatrix U(make_matrix({{1e200, -1e200}, {-1e200, 1e200}}));
  IntegratorConfig cfg;
  cfg.dt = 1.0;
  cfg.horizon = 10;
  const JointState s0(two_column(0.7, 0.2), MixedStrategy(make_vector({0.3, 0.7})));
  try {
    integrate(U, FieldKind::GradientDescentAscent, s0, cfg);
    FAIL() << "expected IntegrationAborted";
  } catch (const IntegrationAborted& e) {
    EXPECT_GT(e.t(), 0.0);
    EXPECT_TRUE(e.last_finite_state().X.allFinite());
    EXPECT_NE(std::string(e.what()).find("last finite state"), std::string::npos);
  }
}

TEST(Integrate, MemorylessBaselineConservesDivergence) {
  const auto U = make_matching_pennies();
  const auto eq = solve_nash(U);
  IntegratorConfig cfg;
  cfg.horizon = 100;
  cfg.sample_stride = 500;
  const MixedStrategy x0(make_vector({0.8, 0.2})), y0(make_vector({0.35, 0.65}));
  const auto traj = integrate_memoryless(U, x0, y0, cfg);
  const double d0 = classical_divergence(x0.probs(), y0.probs(), eq);
  double max_y_dev = 0.0;
  for (const auto& p : traj.points) {
    EXPECT_NEAR(classical_divergence(p.X.col(0), p.y, eq), d0, 1e-5);
    max_y_dev = std::max(max_y_dev, max_abs(p.y - eq.y_star));
  }
  EXPECT_GT(max_y_dev, 0.1);  // cycles instead of converging
}

TEST(IntegratorJson, RoundTripAndErrors) {
  IntegratorSpec spec;
  spec.config.dt = 0.02;
  spec.config.sample_stride = 7;
  spec.field = FieldKind::GradientDescentAscent;
  const auto back = integrator_from_json(to_json(spec));
  EXPECT_EQ(back.config.dt, 0.02);
  EXPECT_EQ(back.config.sample_stride, 7);
  EXPECT_EQ(back.field, FieldKind::GradientDescentAscent);
  EXPECT_THROW(integrator_from_json({{"field", "euler"}}), ConfigError);
  EXPECT_THROW(integrator_from_json({{"dt", "fast"}}), ConfigError);
}
