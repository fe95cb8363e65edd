#ifndef MEMASYM_DIAGNOSTICS_HPP
#define MEMASYM_DIAGNOSTICS_HPP

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "memasym/dynamics.hpp"
#include "memasym/error.hpp"
#include "memasym/game.hpp"
#include "memasym/linalg.hpp"
#include "memasym/strategy.hpp"

namespace memasym {

/// Nonzero vector whose components sum to zero: a direction tangent to the
/// simplex.
class ZeroSumVector {
 public:
  explicit ZeroSumVector(Vector delta) : d_(std::move(delta)) {
    if (d_.size() < 2) throw DimensionError("zero-sum vector needs length >= 2");
    const double scale = std::max(1.0, max_abs(d_));
    if (std::abs(d_.sum()) > 1e-12 * scale)
      throw Error("zero-sum vector components do not sum to zero");
    if (max_abs(d_) == 0.0) throw Error("zero-sum vector must be nonzero");
  }

  int size() const { return static_cast<int>(d_.size()); }
  const Vector& values() const { return d_; }

 private:
  Vector d_;
};

enum class Definiteness { PositiveDefinite, NegativeDefinite, Indefinite, Semidefinite };

// Integer codes used in CSV output.
inline int code(Definiteness d) {
  switch (d) {
    case Definiteness::PositiveDefinite: return 1;
    case Definiteness::NegativeDefinite: return -1;
    case Definiteness::Indefinite: return 0;
    case Definiteness::Semidefinite: return 2;
  }
  return 0;
}

inline std::string to_string(Definiteness d) {
  switch (d) {
    case Definiteness::PositiveDefinite: return "positive-definite";
    case Definiteness::NegativeDefinite: return "negative-definite";
    case Definiteness::Indefinite: return "indefinite";
    case Definiteness::Semidefinite: return "semidefinite";
  }
  return "";
}

struct DefinitenessVerdict {
  Definiteness verdict = Definiteness::Semidefinite;
  Matrix reduced;
  int pivot_index = 0;
};

// --- divergences ----------------------------------------------------------

/// KL(p* || p) = sum over supp(p*) of p*_i (log p*_i - log p_i).
/// Throws InfiniteDivergence if p vanishes where p* does not.
inline double kl_divergence(const Vector& p_star, const Vector& p) {
  require_dims(p_star.size() == p.size(), "KL arguments differ in length");
  double d = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p_star(i) <= 0.0) continue;
    if (!(p(i) > 0.0))
      throw InfiniteDivergence("KL divergence is infinite: p_" +
                               std::to_string(i + 1) + " = 0");
    d += p_star(i) * (std::log(p_star(i)) - std::log(p(i)));
  }
  return d;
}

/// D(X, y) = sum_j KL(x* || x_j) + KL(y* || y).
inline double conditional_sum_divergence(const Matrix& X, const Vector& y,
                                         const EquilibriumInfo& eq) {
  require_dims(X.rows() == eq.x_star.size() && y.size() == eq.y_star.size() &&
                   X.cols() == y.size(),
               "state vs equilibrium");
  double d = kl_divergence(eq.y_star, y);
  for (int j = 0; j < X.cols(); ++j) d += kl_divergence(eq.x_star, X.col(j));
  return d;
}

inline double conditional_sum_divergence(const ReactiveStrategy& X,
                                         const MixedStrategy& y,
                                         const EquilibriumInfo& eq) {
  return conditional_sum_divergence(X.probs(), y.probs(), eq);
}

/// D_c(x, y) = KL(x* || x) + KL(y* || y), the memoryless divergence.
inline double classical_divergence(const Vector& x, const Vector& y,
                                   const EquilibriumInfo& eq) {
  return kl_divergence(eq.x_star, x) + kl_divergence(eq.y_star, y);
}

/// Time derivative of D along the dynamics: D+ = -dy^T X^T U dy, dy = y - y*.
/// Shared by the replicator and gradient descent-ascent variants.
inline double divergence_rate(const PayoffMatrix& U, const Matrix& X,
                              const Vector& y, const EquilibriumInfo& eq) {
  check_dims(U, X, y);
  require_dims(eq.y_star.size() == y.size(), "y vs equilibrium");
  const Vector dy = y - eq.y_star;
  return -dy.dot(X.transpose() * (U.u() * dy));
}

// --- Lyapunov family -------------------------------------------------------

/// H(X; delta) = delta^T U (log X)^T delta.
inline double lyapunov_H(const PayoffMatrix& U, const Matrix& X,
                         const ZeroSumVector& delta) {
  require_dims(X.rows() == U.rows() && X.cols() == U.cols(),
               "reactive strategy shape vs payoff matrix");
  require_dims(delta.size() == U.rows(), "delta length vs m_X");
  if (!(X.minCoeff() > 0.0))
    throw InfiniteDivergence("log X undefined: reactive strategy has a zero entry");
  const Matrix log_x = X.array().log().matrix();
  const Vector& d = delta.values();
  return d.dot(U.u() * (log_x.transpose() * d));
}

/// dH/dt = (delta^T U dy)^2 >= 0, zero for every delta iff y = y*.
inline double lyapunov_rate(const PayoffMatrix& U, const Vector& y,
                            const ZeroSumVector& delta,
                            const EquilibriumInfo& eq) {
  require_dims(y.size() == U.cols() && eq.y_star.size() == U.cols(),
               "y vs payoff columns");
  require_dims(delta.size() == U.rows(), "delta length vs m_X");
  const double s = delta.values().dot(U.u() * (y - eq.y_star));
  return s * s;
}

/// |u^st(x, y) - u*|^2.
inline double exploitability(const PayoffMatrix& U, const Vector& x,
                             const Vector& y, const EquilibriumInfo& eq) {
  const double gap = expected_payoff(U, x, y) - eq.value;
  return gap * gap;
}

/// Squared-norm divergence for gradient descent-ascent:
/// sum_j |x_j - x*|^2 / 2 + |y - y*|^2 / 2.
inline double gda_divergence(const Matrix& X, const Vector& y,
                             const EquilibriumInfo& eq) {
  require_dims(X.rows() == eq.x_star.size() && y.size() == eq.y_star.size() &&
                   X.cols() == y.size(),
               "state vs equilibrium");
  double d = 0.5 * (y - eq.y_star).squaredNorm();
  for (int j = 0; j < X.cols(); ++j)
    d += 0.5 * (Vector(X.col(j)) - eq.x_star).squaredNorm();
  return d;
}

/// Bilinear Lyapunov function for gradient descent-ascent: delta^T U X^T delta.
inline double gda_lyapunov(const PayoffMatrix& U, const Matrix& X,
                           const ZeroSumVector& delta) {
  require_dims(X.rows() == U.rows() && X.cols() == U.cols(),
               "reactive strategy shape vs payoff matrix");
  require_dims(delta.size() == U.rows(), "delta length vs m_X");
  const Vector& d = delta.values();
  return d.dot(U.u() * (X.transpose() * d));
}

// --- zero-sum definiteness --------------------------------------------------

/// M~_kk' = m_kk' - m_k,khat - m_khat,k' + m_khat,khat over k, k' != khat.
/// delta^T M delta equals the ordinary quadratic form of M~ on delta with
/// the khat component dropped.
inline Matrix reduce_for_zero_sum(const Matrix& M, int k_hat) {
  require_dims(M.rows() == M.cols(), "matrix must be square");
  require_dims(M.rows() >= 2, "matrix must be at least 2x2");
  if (k_hat < 0 || k_hat >= M.rows())
    throw DimensionError("pivot index out of range");
  const int n = static_cast<int>(M.rows());
  Matrix r(n - 1, n - 1);
  for (int a = 0, k = 0; k < n; ++k) {
    if (k == k_hat) continue;
    for (int b = 0, kp = 0; kp < n; ++kp) {
      if (kp == k_hat) continue;
      r(a, b) = M(k, kp) - M(k, k_hat) - M(k_hat, kp) + M(k_hat, k_hat);
      ++b;
    }
    ++a;
  }
  return r;
}

/// Classifies M on zero-sum vectors through the eigenvalues of the symmetric
/// part of M~. Eigenvalues within tol * max(spectral radius, max|m_kk'|) of
/// zero count as zero.
inline DefinitenessVerdict zero_sum_definiteness(const Matrix& M,
                                                 double tol = 1e-9,
                                                 std::optional<int> k_hat = {}) {
  require_dims(M.rows() == M.cols() && M.rows() >= 2, "square matrix, n >= 2");
  DefinitenessVerdict v;
  v.pivot_index = k_hat.value_or(static_cast<int>(M.rows()) - 1);
  v.reduced = reduce_for_zero_sum(M, v.pivot_index);
  const Matrix sym = 0.5 * (v.reduced + v.reduced.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), M.cwiseAbs().maxCoeff());
  const double thr = tol * scale;
  const bool has_pos = (ev.array() > thr).any();
  const bool has_neg = (ev.array() < -thr).any();
  if ((ev.array() > thr).all())
    v.verdict = Definiteness::PositiveDefinite;
  else if ((ev.array() < -thr).all())
    v.verdict = Definiteness::NegativeDefinite;
  else if (has_pos && has_neg)
    v.verdict = Definiteness::Indefinite;
  else
    v.verdict = Definiteness::Semidefinite;
  return v;
}

/// (q_1, q_2) with q_j = log x_{1|j} - log(1 - x_{1|j}); two-action X only.
inline std::pair<double, double> log_odds_q(const Matrix& X) {
  if (X.rows() != 2 || X.cols() != 2)
    throw DimensionError("log-odds coordinates need a 2x2 reactive strategy");
  auto q = [](double x) {
    if (!(x > 0.0 && x < 1.0))
      throw InfiniteDivergence("log-odds undefined on the simplex boundary");
    return std::log(x) - std::log1p(-x);
  };
  return {q(X(0, 0)), q(X(0, 1))};
}

// --- per-sample evaluation --------------------------------------------------

struct Probe {
  std::string label;
  ZeroSumVector delta;
};

/// The spanning set e_i - e_{i+1}, labelled d1 .. d{m-1}.
inline std::vector<Probe> default_probes(int m_x) {
  std::vector<Probe> probes;
  for (int i = 0; i + 1 < m_x; ++i) {
    Vector d = Vector::Zero(m_x);
    d(i) = 1.0;
    d(i + 1) = -1.0;
    probes.push_back({"d" + std::to_string(i + 1), ZeroSumVector(d)});
  }
  return probes;
}

/// delta = x - x*, whose rate is the exploitability of Y by x.
inline Probe strategy_probe(std::string label, const Vector& x,
                            const EquilibriumInfo& eq) {
  return {std::move(label), ZeroSumVector(x - eq.x_star)};
}

struct DiagnosticsSample {
  double t = 0.0;
  double D = 0.0;
  double D_rate = 0.0;
  std::vector<std::pair<std::string, double>> H_values;
  std::vector<std::pair<std::string, double>> H_rates;
  double exploitability = 0.0;
  std::optional<std::pair<double, double>> q;
  DefinitenessVerdict definiteness;
};

namespace detail {

template <class F>
double or_infinity(F&& f) {
  try {
    return f();
  } catch (const InfiniteDivergence&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

/// All diagnostics of one state. The field kind selects the divergence and
/// Lyapunov pair (entropic for replicator, quadratic for gradient
/// descent-ascent); rates are common to both. Infinite values (a boundary
/// state under the entropic pair) are reported as +inf.
inline DiagnosticsSample evaluate_diagnostics(const PayoffMatrix& U,
                                              FieldKind kind, double t,
                                              const Matrix& X, const Vector& y,
                                              const EquilibriumInfo& eq,
                                              const std::vector<Probe>& probes) {
  check_dims(U, X, y);
  DiagnosticsSample s;
  s.t = t;
  const bool rep = kind == FieldKind::Replicator;
  s.D = rep ? detail::or_infinity([&] { return conditional_sum_divergence(X, y, eq); })
            : gda_divergence(X, y, eq);
  s.D_rate = divergence_rate(U, X, y, eq);
  for (const auto& p : probes) {
    const double h =
        rep ? detail::or_infinity([&] { return lyapunov_H(U, X, p.delta); })
            : gda_lyapunov(U, X, p.delta);
    s.H_values.emplace_back(p.label, h);
    s.H_rates.emplace_back(p.label, lyapunov_rate(U, y, p.delta, eq));
  }
  const double gap = kernel::expected_payoff(U.u(), X, y) - eq.value;
  s.exploitability = gap * gap;
  if (X.rows() == 2 && X.cols() == 2 && X.minCoeff() > 0.0 && X.maxCoeff() < 1.0)
    s.q = log_odds_q(X);
  s.definiteness = zero_sum_definiteness(Matrix(X.transpose() * U.u()));
  return s;
}

}  // namespace memasym

#endif  // MEMASYM_DIAGNOSTICS_HPP
