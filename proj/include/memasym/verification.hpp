#ifndef MEMASYM_VERIFICATION_HPP
#define MEMASYM_VERIFICATION_HPP

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "memasym/convergence.hpp"
#include "memasym/diagnostics.hpp"
#include "memasym/dynamics.hpp"
#include "memasym/experiments.hpp"
#include "memasym/game.hpp"
#include "memasym/linalg.hpp"
#include "memasym/rng.hpp"
#include "memasym/strategy.hpp"

namespace memasym::verify {

struct CheckResult {
  bool passed = false;
  std::string detail;
};

struct Check {
  std::string id;
  std::string title;
  std::function<CheckResult()> run;
};

// --- helpers ------------------------------------------------------------------

struct State {
  Matrix X;
  Vector y;
};

inline State random_state(Rng& rng, const PayoffMatrix& U, double floor = 0.01) {
  State s{Matrix(U.rows(), U.cols()), Vector()};
  for (int j = 0; j < U.cols(); ++j) s.X.col(j) = rng.simplex_point(U.rows(), floor);
  s.y = rng.simplex_point(U.cols(), floor);
  return s;
}

inline Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

inline auto field_fn(const PayoffMatrix& U, FieldKind kind) {
  return [u = U.u(), kind](const Matrix& X, const Vector& y) {
    return kind == FieldKind::Replicator ? kernel::replicator(u, X, y)
                                         : kernel::gda(u, X, y);
  };
}

/// d/dt f along the flow, from one RK4 step forward and one backward.
template <class Field, class F>
double central_rate(const Field& field, const State& s, double h, F&& f) {
  Matrix Xp = s.X, Xm = s.X;
  Vector yp = s.y, ym = s.y;
  memasym::detail::rk4_step(field, Xp, yp, h);
  memasym::detail::rk4_step(field, Xm, ym, -h);
  return (f(Xp, yp) - f(Xm, ym)) / (2.0 * h);
}

// Richardson combination of central differences at h and h/2: fourth-order
// accurate, so rates near zero are not swamped by the O(h^2) term.
template <class Field, class F>
double extrapolated_rate(const Field& field, const State& s, double h, F&& f) {
  return (4.0 * central_rate(field, s, 0.5 * h, f) - central_rate(field, s, h, f)) / 3.0;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// Definiteness on zero-sum vectors from an orthonormal basis of the zero-sum
// subspace: an independent route to the same classification, which also
// yields explicit witness directions (the eigenvectors).
struct ProjectionWitness {
  Vector eigenvalues;
  Matrix directions;  // columns are zero-sum vectors in the original space
};

inline ProjectionWitness projection_witness(const Matrix& M) {
  const int n = static_cast<int>(M.rows());
  // Householder-free basis: Gram-Schmidt on e_k - e_n.
  Matrix B = Matrix::Zero(n, n - 1);
  for (int k = 0; k + 1 < n; ++k) {
    Vector v = Vector::Zero(n);
    v(k) = 1.0;
    v(n - 1) = -1.0;
    for (int p = 0; p < k; ++p) v -= B.col(p).dot(v) * B.col(p);
    B.col(k) = v / v.norm();
  }
  const Matrix S = 0.5 * (M + M.transpose());
  const Matrix R = B.transpose() * S * B;
  Eigen::SelfAdjointEigenSolver<Matrix> es(R);
  return {es.eigenvalues(), B * es.eigenvectors()};
}

// --- criteria -------------------------------------------------------------------

inline CheckResult mp_global_convergence(const std::string& out_dir = {}) {
  ExperimentConfig cfg = preset_config("mp");
  cfg.output_path = out_dir;
  const auto res = run_experiment(cfg);
  const Vector y_star = make_vector({0.5, 0.5});
  int reached = 0;
  double worst_dist = 0.0, worst_drop = 0.0;
  bool aborted = false;
  for (const auto& r : res.runs) {
    const double d = max_abs(r.trajectory.back().y - y_star);
    worst_dist = std::max(worst_dist, d);
    if (d < 1e-3) ++reached;
    worst_drop = std::max(worst_drop, r.max_q_decrease.value_or(1.0));
    aborted = aborted || r.error.has_value();
  }
  const bool ok = reached == 100 && res.runs.size() == 100 && worst_drop <= 1e-8 &&
                  !aborted && res.seconds < 10.0;
  return {ok, std::to_string(reached) + "/" + std::to_string(res.runs.size()) +
                  " within 1e-3 (worst " + fmt(worst_dist) + "), max q1-q2 drop " +
                  fmt(worst_drop) + ", " + fmt(res.seconds) + " s"};
}

namespace impl {

struct RateCase {
  std::string name;
  PayoffMatrix game;
};

inline std::vector<RateCase> rate_cases() {
  return {{"MP", make_matching_pennies()},
          {"interior", make_coupled_matching_pennies(CoupledVariant::Interior, 1)}};
}

inline CheckResult divergence_rate_identity(FieldKind kind) {
  const double h = 1e-3;
  double worst = 0.0;
  Rng rng(kind == FieldKind::Replicator ? 21 : 22);
  for (const auto& c : rate_cases()) {
    const auto eq = solve_nash(c.game);
    const auto field = field_fn(c.game, kind);
    for (int k = 0; k < 20; ++k) {
      const State s = random_state(rng, c.game);
      const double exact = divergence_rate(c.game, s.X, s.y, eq);
      const double fd = central_rate(field, s, h, [&](const Matrix& X, const Vector& y) {
        return kind == FieldKind::Replicator ? conditional_sum_divergence(X, y, eq)
                                             : gda_divergence(X, y, eq);
      });
      worst = std::max(worst, std::abs(fd - exact) / std::max(std::abs(exact), 1e-8));
    }
  }
  return {worst < 1e-3, "max relative error " + fmt(worst) + " over 2 x 20 states"};
}

inline CheckResult lyapunov_family(FieldKind kind) {
  const double h = 1e-3;
  double min_rate = 0.0, worst_identity = 0.0, worst_fd = 0.0, min_fd = 0.0;
  int iff_failures = 0;
  Rng rng(kind == FieldKind::Replicator ? 41 : 42);
  for (const auto& c : rate_cases()) {
    const auto eq = solve_nash(c.game);
    const auto probes = default_probes(c.game.rows());
    const auto field = field_fn(c.game, kind);
    for (int k = 0; k < 1000; ++k) {
      State s = random_state(rng, c.game);
      // Every tenth state sits exactly at y*.
      if (k % 10 == 9) s.y = eq.y_star;
      const bool at_eq = max_abs(s.y - eq.y_star) < 1e-9;
      double max_rate = 0.0;
      for (const auto& p : probes) {
        const double r = lyapunov_rate(c.game, s.y, p.delta, eq);
        min_rate = std::min(min_rate, r);
        max_rate = std::max(max_rate, r);
        if (k % 5 == 4) {
          const double fd = extrapolated_rate(field, s, h, [&](const Matrix& X, const Vector&) {
            return kind == FieldKind::Replicator ? lyapunov_H(c.game, X, p.delta)
                                                 : gda_lyapunov(c.game, X, p.delta);
          });
          min_fd = std::min(min_fd, fd);
          worst_fd = std::max(worst_fd, std::abs(fd - r) / std::max(r, 1e-8));
        }
      }
      if ((max_rate < 1e-12) != at_eq) ++iff_failures;
      if (!at_eq) {
        const Vector xst = s.X * s.y;
        const double gap = xst.dot(c.game.u() * s.y) - eq.value;
        const double r =
            lyapunov_rate(c.game, s.y, ZeroSumVector(xst - eq.x_star), eq);
        worst_identity = std::max(worst_identity, std::abs(r - gap * gap));
      }
    }
  }
  const bool ok = min_rate >= 0.0 && iff_failures == 0 && worst_identity < 1e-12 &&
                  min_fd >= -1e-8 && worst_fd < 1e-3;
  return {ok, "min rate " + fmt(min_rate) + ", zero-iff-equilibrium failures " +
                  std::to_string(iff_failures) + ", probe identity error " +
                  fmt(worst_identity) + ", FD rate min " + fmt(min_fd) +
                  " rel err " + fmt(worst_fd)};
}

}  // namespace impl

inline CheckResult rate_identity() {
  return impl::divergence_rate_identity(FieldKind::Replicator);
}

inline CheckResult rate_sign() {
  const auto U = make_matching_pennies();
  const auto eq = solve_nash(U);
  Rng rng(31);
  int pd = 0, nd = 0, violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const State s = random_state(rng, U, 0.0);
    if (max_abs(s.y - eq.y_star) == 0.0) continue;
    const auto v = zero_sum_definiteness(Matrix(s.X.transpose() * U.u())).verdict;
    const double rate = divergence_rate(U, s.X, s.y, eq);
    if (v == Definiteness::PositiveDefinite) {
      ++pd;
      if (!(rate < 0.0)) ++violations;
    } else if (v == Definiteness::NegativeDefinite) {
      ++nd;
      if (!(rate > 0.0)) ++violations;
    }
  }
  return {violations == 0 && pd > 0 && nd > 0,
          std::to_string(pd) + " positive-definite, " + std::to_string(nd) +
              " negative-definite states, " + std::to_string(violations) +
              " sign violations"};
}

inline CheckResult lyapunov_family() {
  return impl::lyapunov_family(FieldKind::Replicator);
}

inline CheckResult mp_closed_forms() {
  const auto U = make_matching_pennies();
  const auto eq = solve_nash(U);
  Rng rng(51);
  double eH = 0.0, eRate = 0.0, eD = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const State s = random_state(rng, U, 1e-3);
    const double d = rng.uniform(-2.0, 2.0);
    const ZeroSumVector delta(make_vector({d, -d}));
    const auto [q1, q2] = log_odds_q(s.X);
    const double y = s.y(0), x1 = s.X(0, 0), x2 = s.X(0, 1);
    eH = std::max(eH, std::abs(lyapunov_H(U, s.X, delta) - 2 * d * d * (q1 - q2)));
    eRate = std::max(eRate, std::abs(lyapunov_rate(U, s.y, delta, eq) -
                                     16 * d * d * (y - 0.5) * (y - 0.5)));
    eD = std::max(eD, std::abs(divergence_rate(U, s.X, s.y, eq) +
                               4 * (y - 0.5) * (y - 0.5) * (x1 - x2)));
  }
  return {eH < 1e-12 && eRate < 1e-12 && eD < 1e-12,
          "max errors H " + fmt(eH) + ", H rate " + fmt(eRate) + ", D rate " + fmt(eD)};
}

inline CheckResult definiteness_equivalence() {
  Rng rng(61);
  int disagreements = 0, pivot_mismatch = 0;
  int counts[4] = {0, 0, 0, 0};
  for (int m = 0; m < 200; ++m) {
    // A random shift of the diagonal yields a mix of definite and indefinite
    // matrices.
    const Matrix M = random_matrix(rng, 4, 4) +
                     rng.uniform(-3.0, 3.0) * Matrix::Identity(4, 4);
    const auto verdict = zero_sum_definiteness(M).verdict;
    for (int k = 0; k < 3; ++k)
      if (zero_sum_definiteness(M, 1e-9, k).verdict != verdict) ++pivot_mismatch;
    ++counts[static_cast<int>(verdict)];

    bool pos = false, neg = false;
    auto observe = [&](const Vector& d) {
      const double f = d.dot(M * d);
      pos = pos || f > 0.0;
      neg = neg || f < 0.0;
      if (f == 0.0) pos = neg = true;  // neither strictly definite
    };
    for (int k = 0; k < 10000; ++k) observe(rng.zero_sum_vector(4));
    const auto w = projection_witness(M);
    for (int k = 0; k < w.directions.cols(); ++k) observe(w.directions.col(k));

    bool ok = true;
    switch (verdict) {
      case Definiteness::PositiveDefinite: ok = pos && !neg; break;
      case Definiteness::NegativeDefinite: ok = neg && !pos; break;
      case Definiteness::Indefinite: ok = pos && neg; break;
      case Definiteness::Semidefinite: ok = !(pos && neg); break;
    }
    if (!ok) ++disagreements;
  }
  return {disagreements == 0 && pivot_mismatch == 0,
          std::to_string(disagreements) + " disagreements, " +
              std::to_string(pivot_mismatch) + " pivot mismatches (PD " +
              std::to_string(counts[0]) + ", ND " + std::to_string(counts[1]) +
              ", indefinite " + std::to_string(counts[2]) + ")"};
}

inline CheckResult memoryless_conservation() {
  const auto U = make_matching_pennies();
  const auto eq = solve_nash(U);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = 100.0;
  cfg.sample_stride = 10000;
  Rng rng(71);
  double drift = 0.0;
  for (int k = 0; k < 5; ++k) {
    const MixedStrategy x0(rng.simplex_point(2, 0.01));
    const MixedStrategy y0(rng.simplex_point(2, 0.01));
    const auto traj = integrate_memoryless(U, x0, y0, cfg);
    const auto& a = traj.points.front();
    const auto& b = traj.back();
    drift = std::max(drift, std::abs(classical_divergence(b.X.col(0), b.y, eq) -
                                     classical_divergence(a.X.col(0), a.y, eq)));
  }
  double flat_rate = 0.0;
  for (const auto& game : {make_matching_pennies(),
                           make_coupled_matching_pennies(CoupledVariant::Interior, 1)}) {
    const auto e = solve_nash(game);
    for (int k = 0; k < 200; ++k) {
      const Vector x = rng.simplex_point(game.rows());
      const Matrix X = ReactiveStrategy::memoryless(x, game.cols()).probs();
      flat_rate = std::max(flat_rate,
                           std::abs(divergence_rate(game, X, rng.simplex_point(game.cols()), e)));
    }
  }
  return {drift < 1e-5 && flat_rate <= 1e-14,
          "divergence drift " + fmt(drift) + ", max |rate| with equal columns " +
              fmt(flat_rate)};
}

struct RegimeOutcome {
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline CheckResult coupled_regimes(const std::string& out_dir = {},
                                   std::vector<std::string>* lines = nullptr) {
  auto run = [&](const std::string& name) {
    ExperimentConfig cfg = preset_config(name);
    if (!out_dir.empty()) cfg.output_path = (std::filesystem::path(out_dir) / name).string();
    return run_experiment(cfg);
  };
  bool all = true;
  auto note = [&](const std::string& name, bool ok, const std::string& what, double secs) {
    const bool pass = ok && secs < 60.0;
    all = all && pass;
    if (lines)
      lines->push_back(std::string(pass ? "PASS" : "FAIL") + "  " + name + ": " + what +
                       ", " + fmt(secs) + " s");
  };

  {
    const auto r = run("cmp-interior");
    double worst = 0.0;
    for (const auto& x : r.runs) worst = std::max(worst, x.report.final_dist_y);
    note("interior", worst < 0.01, "max final_dist_y " + fmt(worst), r.seconds);
  }
  {
    const auto r = run("cmp-continuous");
    double worst = 0.0, spread = 0.0;
    for (const auto& a : r.runs) {
      worst = std::max(worst, a.report.dist_to_eq_set);
      for (const auto& b : r.runs)
        spread = std::max(spread, max_abs(a.trajectory.back().y - b.trajectory.back().y));
    }
    note("continuous", worst < 0.01 && spread > 0.05,
         "max dist_to_eq_set " + fmt(worst) + ", widest limit-point gap " + fmt(spread),
         r.seconds);
  }
  {
    const auto r = run("cmp-boundary");
    double worst_x = 0.0, min_osc = 1.0, min_dist_y = 1.0;
    int y_equilibria = 0;
    for (const auto& x : r.runs) {
      worst_x = std::max(worst_x, x.report.final_dist_x_st);
      min_osc = std::min(min_osc, x.report.osc_amplitude_y);
      min_dist_y = std::min(min_dist_y, x.report.final_dist_y);
      if (verify_equilibrium(r.config.game, r.equilibrium.x_star, x.trajectory.back().y,
                             1e-6)
              .is_equilibrium)
        ++y_equilibria;
    }
    note("boundary", worst_x < 0.05 && min_osc > 0.05,
         "max final_dist_x_st " + fmt(worst_x) + ", min osc_amplitude_y " + fmt(min_osc) +
             " (min final_dist_y " + fmt(min_dist_y) + "; y(T) pairs with x* as an "
             "equilibrium in " + std::to_string(y_equilibria) + "/" +
             std::to_string(r.runs.size()) + " runs)",
         r.seconds);
  }
  return {all, all ? "all three regimes reproduced" : "see per-preset lines"};
}

inline CheckResult gda_rate_identity() {
  return impl::divergence_rate_identity(FieldKind::GradientDescentAscent);
}

inline CheckResult gda_lyapunov_family() {
  return impl::lyapunov_family(FieldKind::GradientDescentAscent);
}

inline CheckResult gda_counterparts() {
  const auto a = gda_rate_identity();
  const auto b = gda_lyapunov_family();
  return {a.passed && b.passed, "rate identity: " + a.detail + "; Lyapunov: " + b.detail};
}

inline CheckResult rk4_self_convergence() {
  // First start of the MP preset over a short horizon, where the state is
  // still far from equilibrium and the global error dominates round-off.
  ExperimentConfig mp = preset_config("mp");
  const JointState s0 = initial_states(mp).front();
  auto terminal = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.horizon = 20.0;
    cfg.floor_eps = 0.0;
    cfg.sample_stride = 1 << 30;
    const auto& p = integrate(mp.game, FieldKind::Replicator, s0, cfg).back();
    Vector z(p.X.size() + p.y.size());
    z << p.X.reshaped(), p.y;
    return z;
  };
  const Vector ref = terminal(0.01 / 16);
  const double e1 = (terminal(0.04) - ref).norm();
  const double e2 = (terminal(0.02) - ref).norm();
  const double ratio = e1 / e2;

  Rng rng(101);
  double worst = 0.0;
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const int mx = 2 + static_cast<int>(rng.uniform() * 3);
    const int my = 2 + static_cast<int>(rng.uniform() * 3);
    const PayoffMatrix U(random_matrix(rng, mx, my));
    const State s = random_state(rng, U, 0.05);
    const Matrix gx = kernel::grad_x(U.u(), s.y);
    const Vector gy = kernel::grad_y(U.u(), s.X, s.y);
    Matrix fx(mx, my);
    Vector fy(my);
    for (int i = 0; i < mx; ++i)
      for (int j = 0; j < my; ++j) {
        Matrix Xp = s.X, Xm = s.X;
        Xp(i, j) += h;
        Xm(i, j) -= h;
        fx(i, j) = (kernel::expected_payoff(U.u(), Xp, s.y) -
                    kernel::expected_payoff(U.u(), Xm, s.y)) / (2 * h);
      }
    for (int j = 0; j < my; ++j) {
      Vector yp = s.y, ym = s.y;
      yp(j) += h;
      ym(j) -= h;
      fy(j) = (kernel::expected_payoff(U.u(), s.X, yp) -
               kernel::expected_payoff(U.u(), s.X, ym)) / (2 * h);
    }
    worst = std::max(worst, (fx - gx).cwiseAbs().maxCoeff() /
                                std::max(gx.cwiseAbs().maxCoeff(), 1e-8));
    worst = std::max(worst, max_abs(fy - gy) / std::max(max_abs(gy), 1e-8));
  }
  return {ratio >= 12.0 && ratio <= 20.0 && worst < 1e-5,
          "error ratio " + fmt(ratio) + " (dt 0.04 -> 0.02), gradient FD rel err " +
              fmt(worst)};
}

// --- invariants not covered by the criteria -------------------------------------

inline CheckResult equilibrium_conditions() {
  int failures = 0;
  double worst_const = 0.0;
  Rng rng(201);
  std::vector<PayoffMatrix> games = {
      make_matching_pennies(),
      make_coupled_matching_pennies(CoupledVariant::Interior, 1),
      make_coupled_matching_pennies(CoupledVariant::Continuous, 1),
      make_coupled_matching_pennies(CoupledVariant::Boundary, 1)};
  for (int k = 0; k < 20; ++k)
    games.emplace_back(random_matrix(rng, 2 + k % 3, 2 + (k / 3) % 3));
  for (const auto& U : games) {
    const auto eq = solve_nash(U);
    if (!verify_equilibrium(U, eq.x_star, eq.y_star).is_equilibrium) ++failures;
    if (eq.full_support()) {
      for (int k = 0; k < 20; ++k) {
        const Vector y = rng.simplex_point(U.cols());
        const Vector x = rng.simplex_point(U.rows());
        worst_const = std::max(worst_const, std::abs(eq.x_star.dot(U.u() * y) - eq.value));
        worst_const = std::max(worst_const, std::abs(x.dot(U.u() * eq.y_star) - eq.value));
      }
    }
  }
  const bool same = to_json(make_coupled_matching_pennies(CoupledVariant::Interior, 9)).dump() ==
                    to_json(make_coupled_matching_pennies(CoupledVariant::Interior, 9)).dump();
  return {failures == 0 && worst_const < 1e-9 && same,
          std::to_string(failures) + " failed equilibria, payoff constancy error " +
              fmt(worst_const) + (same ? ", generator deterministic" : ", generator differs")};
}

inline CheckResult strategy_invariants() {
  Rng rng(211);
  double simplex_err = 0.0, path_err = 0.0, linear_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    const PayoffMatrix U(random_matrix(rng, 2 + k % 3, 2 + (k / 3) % 3));
    const State s = random_state(rng, U, 0.0);
    const ReactiveStrategy X(s.X);
    const MixedStrategy y(s.y);
    const auto st = stationary_state(X, y);
    simplex_err = std::max({simplex_err, std::abs(st.x_st.sum() - 1.0),
                            std::max(0.0, -st.x_st.minCoeff())});
    const double joint = (U.u().cwiseProduct(st.joint)).sum();
    path_err = std::max(path_err, std::abs(joint - expected_payoff(U, X, y)));
    // u^st = y^T X^T U y is quadratic in y; it is linear once X ignores its
    // memory (equal columns).
    const Vector y2 = rng.simplex_point(U.cols());
    const double lam = rng.uniform();
    const ReactiveStrategy flat = ReactiveStrategy::memoryless(s.X.col(0), U.cols());
    const double mixed =
        expected_payoff(U, flat, MixedStrategy(lam * s.y + (1 - lam) * y2));
    const double sep = lam * expected_payoff(U, flat, y) +
                       (1 - lam) * expected_payoff(U, flat, MixedStrategy(y2));
    linear_err = std::max(linear_err, std::abs(mixed - sep));
  }
  return {simplex_err < 1e-12 && path_err < 1e-12 && linear_err < 1e-12,
          "simplex error " + fmt(simplex_err) + ", joint-vs-direct " + fmt(path_err) +
              ", linearity " + fmt(linear_err)};
}

inline CheckResult field_invariants() {
  Rng rng(221);
  double tangency = 0.0, fixed = 0.0;
  for (int k = 0; k < 200; ++k) {
    const PayoffMatrix U(random_matrix(rng, 2 + k % 3, 2 + (k / 3) % 3));
    const State s = random_state(rng, U, 0.0);
    for (auto kind : {FieldKind::Replicator, FieldKind::GradientDescentAscent}) {
      const auto f = field_fn(U, kind)(s.X, s.y);
      tangency = std::max({tangency, f.dX.colwise().sum().cwiseAbs().maxCoeff(),
                           std::abs(f.dy.sum())});
    }
  }
  for (const auto& U : {make_matching_pennies(),
                        make_coupled_matching_pennies(CoupledVariant::Interior, 1)}) {
    const auto eq = solve_nash(U);
    const Matrix X = ReactiveStrategy::memoryless(eq.x_star, U.cols()).probs();
    for (auto kind : {FieldKind::Replicator, FieldKind::GradientDescentAscent}) {
      const auto f = field_fn(U, kind)(X, eq.y_star);
      fixed = std::max({fixed, f.dX.cwiseAbs().maxCoeff(), max_abs(f.dy)});
    }
  }
  return {tangency <= 1e-14 && fixed < 1e-12,
          "max column/total sum " + fmt(tangency) + ", field at equilibrium " + fmt(fixed)};
}

inline CheckResult experiment_invariants() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("memasym_check_" + std::to_string(std::chrono::steady_clock::now()
                                                          .time_since_epoch()
                                                          .count()));
  ExperimentConfig cfg = preset_config("mp");
  cfg.initial.count = 3;
  cfg.integrator.horizon = 50.0;
  cfg.integrator.sample_stride = 1;
  auto read = [](const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  cfg.output_path = (dir / "a").string();
  const auto a = run_experiment(cfg);
  cfg.output_path = (dir / "b").string();
  cfg.workers = 2;
  const auto b = run_experiment(cfg);
  bool identical = true;
  double simplex = 0.0, drop = 0.0;
  for (std::size_t k = 0; k < a.runs.size(); ++k) {
    identical = identical && read(dir / "a" / a.runs[k].csv_file) ==
                                 read(dir / "b" / b.runs[k].csv_file);
    simplex = std::max(simplex, a.runs[k].max_simplex_violation);
    drop = std::max(drop, a.runs[k].max_q_decrease.value_or(1.0));
  }
  std::filesystem::remove_all(dir);
  return {identical && simplex <= 1e-6 && drop <= 1e-8,
          std::string(identical ? "CSV byte-identical across runs" : "CSV differs") +
              ", simplex violation " + fmt(simplex) + ", q1-q2 drop " + fmt(drop)};
}

// --- registries -------------------------------------------------------------------

struct AcceptanceOptions {
  std::string output_dir;  // preset CSVs go here when set
  std::vector<std::string>* regime_lines = nullptr;
};

inline std::vector<Check> acceptance_checks(const AcceptanceOptions& opt = {}) {
  return {
      {"1", "global convergence in matching pennies",
       [opt] {
         return mp_global_convergence(
             opt.output_dir.empty() ? std::string()
                                    : (std::filesystem::path(opt.output_dir) / "mp").string());
       }},
      {"2", "divergence rate identity", rate_identity},
      {"3", "divergence rate sign under definiteness", rate_sign},
      {"4", "Lyapunov family rates", [] { return lyapunov_family(); }},
      {"5", "matching pennies closed forms", mp_closed_forms},
      {"6", "zero-sum definiteness reduction", definiteness_equivalence},
      {"7", "memoryless conservation", memoryless_conservation},
      {"8", "coupled matching pennies regimes",
       [opt] { return coupled_regimes(opt.output_dir, opt.regime_lines); }},
      {"9", "gradient descent-ascent counterparts", gda_counterparts},
      {"10", "numerical hygiene", rk4_self_convergence},
  };
}

/// Properties that hold for every correct build; the coupled-game regimes and
/// the timed preset run are left to the acceptance suite.
inline std::vector<Check> invariant_checks() {
  return {
      {"equilibrium", "solver output satisfies the equilibrium conditions",
       equilibrium_conditions},
      {"strategy", "stationary quantities", strategy_invariants},
      {"fields", "tangency and fixed points", field_invariants},
      {"rate", "divergence rate identity", rate_identity},
      {"sign", "divergence rate sign", rate_sign},
      {"lyapunov", "Lyapunov family", [] { return lyapunov_family(); }},
      {"closed-forms", "matching pennies closed forms", mp_closed_forms},
      {"definiteness", "zero-sum definiteness", definiteness_equivalence},
      {"conservation", "memoryless conservation", memoryless_conservation},
      {"gda", "gradient descent-ascent counterparts", gda_counterparts},
      {"numerics", "RK4 order and gradients", rk4_self_convergence},
      {"experiments", "determinism, simplex, monotone q", experiment_invariants},
  };
}

}  // namespace memasym::verify

#endif  // MEMASYM_VERIFICATION_HPP
