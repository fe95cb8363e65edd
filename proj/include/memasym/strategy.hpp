#ifndef MEMASYM_STRATEGY_HPP
#define MEMASYM_STRATEGY_HPP

#include <cmath>
#include <string>

#include "memasym/error.hpp"
#include "memasym/game.hpp"
#include "memasym/linalg.hpp"

namespace memasym {

// Column sums within this of 1 are accepted as-is; within the renormalization
// slack they are rescaled; beyond it construction fails.
inline constexpr double kSimplexTol = 1e-9;
inline constexpr double kRenormalizeSlack = 1e-6;

namespace detail {

inline Vector to_simplex(Vector p, const char* what) {
  if (!p.allFinite())
    throw SimplexError(std::string(what) + ": non-finite probability");
  if (p.minCoeff() < -kRenormalizeSlack)
    throw SimplexError(std::string(what) + ": negative probability");
  const double s = p.sum();
  if (std::abs(s - 1.0) > kRenormalizeSlack)
    throw SimplexError(std::string(what) + ": probabilities sum to " +
                       std::to_string(s));
  p = p.cwiseMax(0.0);
  if (std::abs(p.sum() - 1.0) > kSimplexTol) p /= p.sum();
  return p;
}

}  // namespace detail

/// History-free probability vector (Y's strategy, or X's in the memoryless
/// baseline).
class MixedStrategy {
 public:
  explicit MixedStrategy(Vector probs)
      : p_(detail::to_simplex(std::move(probs), "mixed strategy")) {
    if (p_.size() < 1 || p_.size() > kMaxActions)
      throw DimensionError("mixed strategy length out of range");
  }

  static MixedStrategy uniform(int n) {
    return MixedStrategy(Vector::Constant(n, 1.0 / n));
  }

  int size() const { return static_cast<int>(p_.size()); }
  const Vector& probs() const { return p_; }
  double operator()(int k) const { return p_(k); }

 private:
  Vector p_;
};

/// X's memory-one strategy: x_{i|j} = P(X plays a_i | Y last played b_j).
/// Stored m_X x m_Y with one simplex column per opponent action.
class ReactiveStrategy {
 public:
  explicit ReactiveStrategy(Matrix probs) : x_(std::move(probs)) {
    if (x_.rows() < 1 || x_.cols() < 1 || x_.rows() > kMaxActions ||
        x_.cols() > kMaxActions)
      throw DimensionError("reactive strategy shape out of range");
    for (int j = 0; j < x_.cols(); ++j)
      x_.col(j) = detail::to_simplex(Vector(x_.col(j)), "reactive strategy column");
  }

  // Every column equal to x: a reactive strategy that ignores its memory.
  static ReactiveStrategy memoryless(const Vector& x, int m_y) {
    Matrix m(x.size(), m_y);
    for (int j = 0; j < m_y; ++j) m.col(j) = x;
    return ReactiveStrategy(m);
  }

  int rows() const { return static_cast<int>(x_.rows()); }
  int cols() const { return static_cast<int>(x_.cols()); }
  const Matrix& probs() const { return x_; }
  Vector column(int j) const { return x_.col(j); }
  double operator()(int i, int j) const { return x_(i, j); }

 private:
  Matrix x_;
};

struct JointState {
  ReactiveStrategy X;
  MixedStrategy y;

  JointState(ReactiveStrategy x, MixedStrategy y_) : X(std::move(x)), y(std::move(y_)) {
    require_dims(X.cols() == y.size(), "reactive strategy columns vs y length");
  }

  bool fits(const PayoffMatrix& U) const {
    return X.rows() == U.rows() && X.cols() == U.cols();
  }
};

struct StationaryState {
  Vector x_st;
  Matrix joint;  // p^st_ij = x^st_i y_j
};

inline void check_dims(const PayoffMatrix& U, const Matrix& X, const Vector& y) {
  require_dims(X.rows() == U.rows() && X.cols() == U.cols(),
               "reactive strategy shape vs payoff matrix");
  require_dims(y.size() == U.cols(), "y length vs payoff columns");
}

// Raw-matrix kernels shared with the integrator.
namespace kernel {

inline Vector stationary(const Matrix& X, const Vector& y) { return X * y; }

inline double expected_payoff(const Matrix& U, const Matrix& X, const Vector& y) {
  return (X * y).dot(U * y);
}

}  // namespace kernel

/// x^st_i = sum_j x_{i|j} y_j, the reactive player's marginal in the
/// stationary state of the repeated game.
inline Vector stationary_strategy(const ReactiveStrategy& X,
                                  const MixedStrategy& y) {
  require_dims(X.cols() == y.size(), "reactive strategy columns vs y length");
  return kernel::stationary(X.probs(), y.probs());
}

inline StationaryState stationary_state(const ReactiveStrategy& X,
                                        const MixedStrategy& y) {
  StationaryState s;
  s.x_st = stationary_strategy(X, y);
  s.joint = s.x_st * y.probs().transpose();
  return s;
}

/// u^st = sum_ij u_ij x^st_i y_j.
inline double expected_payoff(const PayoffMatrix& U, const ReactiveStrategy& X,
                              const MixedStrategy& y) {
  check_dims(U, X.probs(), y.probs());
  return kernel::expected_payoff(U.u(), X.probs(), y.probs());
}

/// Memoryless payoff x^T U y.
inline double expected_payoff(const PayoffMatrix& U, const Vector& x,
                              const Vector& y) {
  require_dims(x.size() == U.rows() && y.size() == U.cols(),
               "strategy lengths vs payoff matrix");
  return x.dot(U.u() * y);
}

}  // namespace memasym

#endif  // MEMASYM_STRATEGY_HPP
