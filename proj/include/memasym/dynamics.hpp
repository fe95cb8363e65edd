#ifndef MEMASYM_DYNAMICS_HPP
#define MEMASYM_DYNAMICS_HPP

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "memasym/error.hpp"
#include "memasym/game.hpp"
#include "memasym/linalg.hpp"
#include "memasym/strategy.hpp"

namespace memasym {

enum class FieldKind { Replicator, GradientDescentAscent };

inline std::string to_string(FieldKind k) {
  return k == FieldKind::Replicator ? "replicator" : "gda";
}

inline FieldKind field_kind_from_string(const std::string& s) {
  if (s == "replicator") return FieldKind::Replicator;
  if (s == "gda") return FieldKind::GradientDescentAscent;
  throw ConfigError("unknown field kind '" + s + "' (expected replicator|gda)");
}

struct IntegratorConfig {
  double dt = 0.01;
  double horizon = 100.0;
  double floor_eps = 1e-12;
  bool renormalize = true;
  // Record every n-th step (the final state is always recorded).
  int sample_stride = 1;

  void validate(int max_actions) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw ConfigError("horizon must be > 0");
    if (dt > horizon) throw ConfigError("dt must not exceed horizon");
    if (!(floor_eps >= 0.0) || floor_eps >= 1.0 / max_actions)
      throw ConfigError("floor_eps must lie in [0, 1/max(m_X, m_Y))");
    if (sample_stride < 1) throw ConfigError("sample_stride must be >= 1");
  }
};

struct FieldValue {
  Matrix dX;
  Vector dy;
};

struct TrajectoryPoint {
  double t = 0.0;
  Matrix X;  // m_X x m_Y; a single column for the memoryless baseline
  Vector y;
  bool clamped = false;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  int clamped_steps = 0;
  std::size_t steps = 0;

  const TrajectoryPoint& back() const { return points.back(); }
};

using Observer = std::function<void(const TrajectoryPoint&)>;

class IntegrationAborted : public Error {
 public:
  IntegrationAborted(double t, TrajectoryPoint last_finite)
      : Error(describe(t, last_finite)), t_(t), last_(std::move(last_finite)) {}

  double t() const { return t_; }
  const TrajectoryPoint& last_finite_state() const { return last_; }

 private:
  static std::string describe(double t, const TrajectoryPoint& p) {
    std::ostringstream os;
    os << "non-finite state at t=" << t << "; last finite state at t=" << p.t
       << ": X=[" << p.X.reshaped().transpose() << "] y=[" << p.y.transpose()
       << "]";
    return os.str();
  }

  double t_;
  TrajectoryPoint last_;
};

// Raw kernels: no validation, used in the integrator loop.
namespace kernel {

inline Matrix grad_x(const Matrix& U, const Vector& y) {
  return (U * y) * y.transpose();
}

inline Vector grad_y(const Matrix& U, const Matrix& X, const Vector& y) {
  return U.transpose() * (X * y) + X.transpose() * (U * y);
}

inline FieldValue replicator(const Matrix& U, const Matrix& X, const Vector& y) {
  const Matrix g = grad_x(U, y);
  const Vector h = grad_y(U, X, y);
  FieldValue f;
  f.dX.resize(X.rows(), X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    const double avg = X.col(j).dot(g.col(j));
    f.dX.col(j) = X.col(j).cwiseProduct(Vector(g.col(j)) -
                                        Vector::Constant(X.rows(), avg));
  }
  const double avg_y = y.dot(h);
  f.dy = -y.cwiseProduct(h - Vector::Constant(y.size(), avg_y));
  return f;
}

inline FieldValue gda(const Matrix& U, const Matrix& X, const Vector& y) {
  const Matrix g = grad_x(U, y);
  const Vector h = grad_y(U, X, y);
  FieldValue f;
  f.dX = g;
  for (int j = 0; j < X.cols(); ++j) f.dX.col(j).array() -= g.col(j).mean();
  f.dy = -(h.array() - h.mean()).matrix();
  return f;
}

// Both players memoryless; x is stored as a one-column matrix.
inline FieldValue memoryless_replicator(const Matrix& U, const Matrix& x,
                                        const Vector& y) {
  const Vector gx = U * y;
  const Vector gy = U.transpose() * x.col(0);
  FieldValue f;
  f.dX = x.col(0).cwiseProduct(gx - Vector::Constant(gx.size(), x.col(0).dot(gx)));
  f.dy = -y.cwiseProduct(gy - Vector::Constant(gy.size(), y.dot(gy)));
  return f;
}

}  // namespace kernel

/// d u^st / d x_{i|j} = y_j sum_j' u_ij' y_j'.
inline Matrix grad_x(const PayoffMatrix& U, const ReactiveStrategy& X,
                     const MixedStrategy& y) {
  check_dims(U, X.probs(), y.probs());
  return kernel::grad_x(U.u(), y.probs());
}

/// d u^st / d y_j = sum_i u_ij x^st_i + sum_i x_{i|j} sum_j' u_ij' y_j'.
/// The second term is the memory contribution through x^st's dependence on y.
inline Vector grad_y(const PayoffMatrix& U, const ReactiveStrategy& X,
                     const MixedStrategy& y) {
  check_dims(U, X.probs(), y.probs());
  return kernel::grad_y(U.u(), X.probs(), y.probs());
}

/// Replicator dynamics: X ascends u^st, Y descends it.
inline FieldValue replicator_field(const PayoffMatrix& U,
                                   const ReactiveStrategy& X,
                                   const MixedStrategy& y) {
  check_dims(U, X.probs(), y.probs());
  return kernel::replicator(U.u(), X.probs(), y.probs());
}

/// Gradient descent-ascent with mean-centred (simplex-tangent) gradients.
/// Defined on the interior only.
inline FieldValue gda_field(const PayoffMatrix& U, const ReactiveStrategy& X,
                            const MixedStrategy& y) {
  check_dims(U, X.probs(), y.probs());
  return kernel::gda(U.u(), X.probs(), y.probs());
}

/// Replicator dynamics of the game without memory (x, y both mixed).
inline FieldValue memoryless_replicator_field(const PayoffMatrix& U,
                                              const MixedStrategy& x,
                                              const MixedStrategy& y) {
  require_dims(x.size() == U.rows() && y.size() == U.cols(),
               "strategy lengths vs payoff matrix");
  Matrix xm = x.probs();
  return kernel::memoryless_replicator(U.u(), xm, y.probs());
}

inline FieldValue evaluate_field(FieldKind kind, const PayoffMatrix& U,
                                 const ReactiveStrategy& X,
                                 const MixedStrategy& y) {
  return kind == FieldKind::Replicator ? replicator_field(U, X, y)
                                       : gda_field(U, X, y);
}

namespace detail {

template <class Field>
void rk4_step(const Field& field, Matrix& X, Vector& y, double h) {
  const FieldValue k1 = field(X, y);
  const FieldValue k2 = field(X + 0.5 * h * k1.dX, y + 0.5 * h * k1.dy);
  const FieldValue k3 = field(X + 0.5 * h * k2.dX, y + 0.5 * h * k2.dy);
  const FieldValue k4 = field(X + h * k3.dX, y + h * k3.dy);
  X += (h / 6.0) * (k1.dX + 2.0 * k2.dX + 2.0 * k3.dX + k4.dX);
  y += (h / 6.0) * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
}

// Clamps every probability to >= floor and optionally restores unit sums.
// Renormalization rescales only the entries above the floor, repeating when
// that pushes another entry under it, so the floor survives. Returns whether
// any entry was below the floor.
inline bool project(Matrix& X, Vector& y, double floor, bool renormalize) {
  bool clamped = false;
  auto fix = [&](auto&& block) {
    const int n = static_cast<int>(block.size());
    std::vector<bool> pinned(n, false);
    for (int k = 0; k < n; ++k) {
      if (block(k) < floor) {
        block(k) = floor;
        pinned[k] = true;
        clamped = true;
      }
    }
    if (!renormalize) return;
    for (int pass = 0; pass < n; ++pass) {
      double free_sum = 0.0;
      int n_pinned = 0;
      for (int k = 0; k < n; ++k) {
        if (pinned[k])
          ++n_pinned;
        else
          free_sum += block(k);
      }
      const double scale = (1.0 - n_pinned * floor) / free_sum;
      bool again = false;
      for (int k = 0; k < n; ++k) {
        if (pinned[k]) continue;
        block(k) *= scale;
        if (block(k) < floor) {
          block(k) = floor;
          pinned[k] = true;
          again = true;
        }
      }
      if (!again) break;
    }
  };
  for (int j = 0; j < X.cols(); ++j) fix(X.col(j));
  fix(y);
  return clamped;
}

template <class Field>
Trajectory integrate_with(const Field& field, Matrix X, Vector y,
                          const IntegratorConfig& cfg,
                          const std::vector<Observer>& observers) {
  Trajectory traj;
  const auto n_steps = static_cast<std::size_t>(
      std::max(1.0, std::ceil(cfg.horizon / cfg.dt - 1e-9)));
  TrajectoryPoint point{0.0, X, y, false};
  for (const auto& obs : observers) obs(point);
  traj.points.push_back(point);

  bool clamped_since_record = false;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double t0 = static_cast<double>(k - 1) * cfg.dt;
    const double t1 = std::min(static_cast<double>(k) * cfg.dt, cfg.horizon);
    rk4_step(field, X, y, t1 - t0);
    if (!X.allFinite() || !y.allFinite())
      throw IntegrationAborted(t1, point);
    const bool clamped = project(X, y, cfg.floor_eps, cfg.renormalize);
    if (clamped) ++traj.clamped_steps;
    clamped_since_record = clamped_since_record || clamped;

    point.t = t1;
    point.X = X;
    point.y = y;
    point.clamped = clamped;
    for (const auto& obs : observers) obs(point);
    if (k % static_cast<std::size_t>(cfg.sample_stride) == 0 || k == n_steps) {
      point.clamped = clamped_since_record;
      traj.points.push_back(point);
      clamped_since_record = false;
    }
  }
  traj.steps = n_steps;
  return traj;
}

}  // namespace detail

/// Fixed-step classical RK4 on the chosen field. After every step each
/// probability is clamped to >= floor_eps and each simplex block is
/// renormalized (if enabled); observers see the projected state.
inline Trajectory integrate(const PayoffMatrix& U, FieldKind kind,
                            const JointState& state0,
                            const IntegratorConfig& cfg,
                            const std::vector<Observer>& observers = {}) {
  require_dims(state0.fits(U), "initial state vs payoff matrix");
  cfg.validate(std::max(U.rows(), U.cols()));
  const Matrix u = U.u();
  if (kind == FieldKind::Replicator) {
    auto f = [&u](const Matrix& X, const Vector& y) {
      return kernel::replicator(u, X, y);
    };
    return detail::integrate_with(f, state0.X.probs(), state0.y.probs(), cfg,
                                  observers);
  }
  auto f = [&u](const Matrix& X, const Vector& y) { return kernel::gda(u, X, y); };
  return detail::integrate_with(f, state0.X.probs(), state0.y.probs(), cfg,
                                observers);
}

/// Baseline without memory. Trajectory points carry x as a one-column X.
inline Trajectory integrate_memoryless(const PayoffMatrix& U,
                                       const MixedStrategy& x0,
                                       const MixedStrategy& y0,
                                       const IntegratorConfig& cfg,
                                       const std::vector<Observer>& observers = {}) {
  require_dims(x0.size() == U.rows() && y0.size() == U.cols(),
               "initial state vs payoff matrix");
  cfg.validate(std::max(U.rows(), U.cols()));
  const Matrix u = U.u();
  auto f = [&u](const Matrix& x, const Vector& y) {
    return kernel::memoryless_replicator(u, x, y);
  };
  Matrix x = x0.probs();
  return detail::integrate_with(f, x, y0.probs(), cfg, observers);
}

// --- JSON ----------------------------------------------------------------

struct IntegratorSpec {
  IntegratorConfig config;
  FieldKind field = FieldKind::Replicator;
};

inline nlohmann::json to_json(const IntegratorSpec& s) {
  return {{"dt", s.config.dt},
          {"horizon", s.config.horizon},
          {"floor_eps", s.config.floor_eps},
          {"renormalize", s.config.renormalize},
          {"sample_stride", s.config.sample_stride},
          {"field", to_string(s.field)}};
}

inline IntegratorSpec integrator_from_json(const nlohmann::json& j) {
  IntegratorSpec s;
  try {
    s.config.dt = j.value("dt", s.config.dt);
    s.config.horizon = j.value("horizon", s.config.horizon);
    s.config.floor_eps = j.value("floor_eps", s.config.floor_eps);
    s.config.renormalize = j.value("renormalize", s.config.renormalize);
    s.config.sample_stride = j.value("sample_stride", s.config.sample_stride);
    if (j.contains("field"))
      s.field = field_kind_from_string(j["field"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("integrator: ") + e.what());
  }
  return s;
}

}  // namespace memasym

#endif  // MEMASYM_DYNAMICS_HPP
