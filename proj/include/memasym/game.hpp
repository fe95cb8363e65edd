#ifndef MEMASYM_GAME_HPP
#define MEMASYM_GAME_HPP

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memasym/error.hpp"
#include "memasym/linalg.hpp"
#include "memasym/rng.hpp"
#include "memasym/simplex_lp.hpp"

namespace memasym {

/// X's payoff table of a two-player zero-sum game. Y's payoff is -U and is
/// never stored.
class PayoffMatrix {
 public:
  explicit PayoffMatrix(Matrix entries, std::optional<std::string> variant = {},
                        std::optional<std::uint64_t> seed = {})
      : u_(std::move(entries)), variant_(std::move(variant)), seed_(seed) {
    if (u_.rows() < 2 || u_.cols() < 2)
      throw DimensionError("payoff matrix needs at least 2 actions per player");
    if (u_.rows() > kMaxActions || u_.cols() > kMaxActions)
      throw DimensionError("payoff matrix exceeds kMaxActions");
    if (!u_.allFinite()) throw Error("payoff matrix has non-finite entries");
  }

  int rows() const { return static_cast<int>(u_.rows()); }
  int cols() const { return static_cast<int>(u_.cols()); }
  const Matrix& u() const { return u_; }
  double operator()(int i, int j) const { return u_(i, j); }

  const std::optional<std::string>& variant() const { return variant_; }
  const std::optional<std::uint64_t>& seed() const { return seed_; }

  friend bool operator==(const PayoffMatrix& a, const PayoffMatrix& b) {
    return a.u_ == b.u_;
  }

 private:
  Matrix u_;
  std::optional<std::string> variant_;
  std::optional<std::uint64_t> seed_;
};

enum class CoupledVariant { Interior, Continuous, Boundary };

inline std::string variant_name(CoupledVariant v) {
  switch (v) {
    case CoupledVariant::Interior: return "cmp-interior";
    case CoupledVariant::Continuous: return "cmp-continuous";
    case CoupledVariant::Boundary: return "cmp-boundary";
  }
  return "";
}

inline PayoffMatrix make_matching_pennies() {
  return PayoffMatrix(make_matrix({{1.0, -1.0}, {-1.0, 1.0}}),
                      "matching-pennies");
}

/// Two matching-pennies games coupled through the cyclic permutation
/// sigma = (1->2, 2->3, 3->4, 4->1): u_ij = +2 if j = sigma(i), -2 if
/// i = sigma(j). The remaining eight entries depend on the variant.
inline PayoffMatrix make_coupled_matching_pennies(CoupledVariant variant,
                                                  std::uint64_t seed = 0) {
  constexpr int n = 4;
  auto sigma = [](int k) { return (k + 1) % n; };
  Matrix u = Matrix::Zero(n, n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == sigma(i)) {
        u(i, j) = 2.0;
      } else if (i == sigma(j)) {
        u(i, j) = -2.0;
      } else if (variant == CoupledVariant::Interior) {
        u(i, j) = rng.uniform(-1.0, 1.0);
      }
    }
  }
  if (variant == CoupledVariant::Boundary) u(0, 0) = -1.0;
  std::optional<std::uint64_t> recorded_seed;
  if (variant == CoupledVariant::Interior) recorded_seed = seed;
  return PayoffMatrix(u, variant_name(variant), recorded_seed);
}

struct EquilibriumInfo {
  Vector x_star;
  Vector y_star;
  double value = 0.0;
  std::vector<int> support_x;
  std::vector<int> support_y;
  /// True when the column family {u_.j} is linearly dependent.
  bool degenerate = false;
  /// Orthonormal basis of {a : sum_j a_j u_.j = 0}.
  std::vector<Vector> null_space_coeffs;

  bool full_support() const {
    return static_cast<Eigen::Index>(support_x.size()) == x_star.size() &&
           static_cast<Eigen::Index>(support_y.size()) == y_star.size();
  }
};

/// The equilibrium set of the continuous-equilibrium game:
/// x*(r) = r base_x + (1 - r) alt_x, likewise for y.
struct EquilibriumSegmentParam {
  Vector base_x;
  Vector alt_x;
  Vector base_y;
  Vector alt_y;
  // Position of the solver's reported equilibrium on each segment.
  double r_x = 0.0;
  double r_y = 0.0;

  Vector x_at(double r) const { return r * base_x + (1.0 - r) * alt_x; }
  Vector y_at(double r) const { return r * base_y + (1.0 - r) * alt_y; }
};

struct VerifyResult {
  bool is_equilibrium = false;
  double value = 0.0;
};

namespace detail {

inline double payoff_scale(const PayoffMatrix& U) {
  return std::max(1.0, U.u().cwiseAbs().maxCoeff());
}

// Game value from X's maximin LP, with the matrix shifted so the value is
// positive and the auxiliary variable can be sign-constrained.
inline double game_value(const PayoffMatrix& U) {
  const int m = U.rows();
  const int n = U.cols();
  const double shift = 1.0 - U.u().minCoeff();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m + 1);
  c(m) = 1.0;
  lp::Problem prob(c);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd a(m + 1);
    for (int i = 0; i < m; ++i) a(i) = -(U(i, j) + shift);
    a(m) = 1.0;
    prob.add(a, lp::Relation::LessEqual, 0.0);
  }
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(m + 1);
  ones(m) = 0.0;
  prob.add(ones, lp::Relation::Equal, 1.0);
  const auto sol = prob.solve();
  if (sol.status != lp::Status::Optimal)
    throw SolverError("maximin LP did not reach optimality (solver bug)");
  return sol.objective - shift;
}

enum class Player { X, Y };
enum class LexOrder { Max, Min };

// Lexicographically extreme point of a player's optimal strategy set:
//   X: {x in simplex : x^T U >= value}, Y: {y in simplex : U y <= value},
// both relaxed by face_tol. Coordinates are optimized one at a time, each
// later stage keeping earlier coordinates at their optimum.
inline Vector lex_extreme_strategy(const PayoffMatrix& U, double value,
                                   Player player, LexOrder order,
                                   double face_tol) {
  const int n = player == Player::X ? U.rows() : U.cols();
  const int k_con = player == Player::X ? U.cols() : U.rows();
  std::vector<double> fixed;
  Vector result(n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c(k) = order == LexOrder::Max ? 1.0 : -1.0;
    lp::Problem prob(c);
    for (int r = 0; r < k_con; ++r) {
      Eigen::VectorXd a(n);
      for (int s = 0; s < n; ++s)
        a(s) = player == Player::X ? U(s, r) : U(r, s);
      if (player == Player::X)
        prob.add(a, lp::Relation::GreaterEqual, value - face_tol);
      else
        prob.add(a, lp::Relation::LessEqual, value + face_tol);
    }
    prob.add(Eigen::VectorXd::Ones(n), lp::Relation::Equal, 1.0);
    for (int l = 0; l < k; ++l) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(l) = 1.0;
      if (order == LexOrder::Max)
        prob.add(e, lp::Relation::GreaterEqual, fixed[l] - face_tol);
      else
        prob.add(e, lp::Relation::LessEqual, fixed[l] + face_tol);
    }
    const auto sol = prob.solve();
    if (sol.status != lp::Status::Optimal)
      throw SolverError("optimal-face LP infeasible (solver bug)");
    fixed.push_back(sol.z(k));
    if (k == n - 1)
      for (int s = 0; s < n; ++s) result(s) = sol.z(s);
  }
  return result;
}

inline Vector clean_probabilities(Vector p, double tol) {
  for (int k = 0; k < p.size(); ++k)
    if (p(k) < tol) p(k) = 0.0;
  return p / p.sum();
}

// Every equilibrium strategy is a best response to every optimal strategy of
// the opponent, so actions that lose against the other side's optimum carry no
// weight. The lexicographic stage can leave such actions with weight up to
// face_tol / gap, which this removes. Residual weight on the opponent's side
// perturbs the payoffs slightly, hence the margin above tol.
inline void prune_non_best_responses(const PayoffMatrix& U, double value, Vector& x,
                                     Vector& y, double tol) {
  const double eps = 100.0 * tol * payoff_scale(U);
  const Vector rows = U.u() * y;
  const Vector cols = U.u().transpose() * x;
  for (int i = 0; i < x.size(); ++i)
    if (rows(i) < value - eps) x(i) = 0.0;
  for (int j = 0; j < y.size(); ++j)
    if (cols(j) > value + eps) y(j) = 0.0;
  x /= x.sum();
  y /= y.sum();
}

inline std::vector<int> support_of(const Vector& p, double tol) {
  std::vector<int> s;
  for (int k = 0; k < p.size(); ++k)
    if (p(k) > tol) s.push_back(k);
  return s;
}

// Re-solves the indifference conditions on the detected supports so that
// interior equilibria satisfy the constant-payoff identity to round-off.
// Leaves the input alone if the support system is singular or the refined
// point drifts or leaves the simplex.
inline void polish(const PayoffMatrix& U, Vector& x, Vector& y,
                   const std::vector<int>& sx, const std::vector<int>& sy) {
  const int k = static_cast<int>(sx.size());
  if (k != static_cast<int>(sy.size())) return;
  Eigen::MatrixXd ax(k + 1, k + 1), ay(k + 1, k + 1);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      ax(a, b) = U(sx[b], sy[a]);  // row a: column payoff of sy[a]
      ay(a, b) = U(sx[a], sy[b]);  // row a: row payoff of sx[a]
    }
    ax(a, k) = -1.0;
    ay(a, k) = -1.0;
    ax(k, a) = 1.0;
    ay(k, a) = 1.0;
  }
  ax(k, k) = 0.0;
  ay(k, k) = 0.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs(k) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lux(ax), luy(ay);
  if (!lux.isInvertible() || !luy.isInvertible()) return;
  const Eigen::VectorXd px = lux.solve(rhs);
  const Eigen::VectorXd py = luy.solve(rhs);
  Vector nx = Vector::Zero(x.size());
  Vector ny = Vector::Zero(y.size());
  for (int a = 0; a < k; ++a) {
    nx(sx[a]) = px(a);
    ny(sy[a]) = py(a);
  }
  if (nx.minCoeff() < 0.0 || ny.minCoeff() < 0.0) return;
  if (max_abs(nx - x) > 1e-6 || max_abs(ny - y) > 1e-6) return;
  x = nx;
  y = ny;
}

}  // namespace detail

/// Null space of the column family {u_.j} by singular-value thresholding at
/// tol * sigma_max.
inline std::vector<Vector> column_null_space(const PayoffMatrix& U,
                                             double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(U.u()),
                                        Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = tol * std::max(sv(0), 1e-300);
  std::vector<Vector> basis;
  const Eigen::MatrixXd& v = svd.matrixV();
  for (int j = 0; j < U.cols(); ++j) {
    const bool null = j >= sv.size() || sv(j) <= cutoff;
    if (null) basis.push_back(Vector(v.col(j)));
  }
  return basis;
}

/// Checks the support-wise Nash conditions: every column on Y's support pays
/// the value and none pays less; every row on X's support pays the value and
/// none pays more.
inline VerifyResult verify_equilibrium(const PayoffMatrix& U, const Vector& x,
                                       const Vector& y, double tol = 1e-9) {
  require_dims(x.size() == U.rows(), "x length vs payoff rows");
  require_dims(y.size() == U.cols(), "y length vs payoff cols");
  const double eps = tol * detail::payoff_scale(U);
  const Vector col_pay = U.u().transpose() * x;
  const Vector row_pay = U.u() * y;
  const double value = x.dot(U.u() * y);
  VerifyResult res{true, value};
  for (int j = 0; j < U.cols(); ++j) {
    if (col_pay(j) < value - eps) res.is_equilibrium = false;
    if (y(j) > tol && std::abs(col_pay(j) - value) > eps)
      res.is_equilibrium = false;
  }
  for (int i = 0; i < U.rows(); ++i) {
    if (row_pay(i) > value + eps) res.is_equilibrium = false;
    if (x(i) > tol && std::abs(row_pay(i) - value) > eps)
      res.is_equilibrium = false;
  }
  return res;
}

/// One Nash equilibrium of the zero-sum game via linear programming.
///
/// The value comes from X's maximin LP. Each player's strategy is then the
/// lexicographically largest point of that player's optimal set, so the
/// result is deterministic even when equilibria are not unique.
inline EquilibriumInfo solve_nash(const PayoffMatrix& U, double tol = 1e-9) {
  const double value = detail::game_value(U);
  const double face_tol = 1e-2 * tol * detail::payoff_scale(U);
  Vector x = detail::lex_extreme_strategy(U, value, detail::Player::X,
                                          detail::LexOrder::Max, face_tol);
  Vector y = detail::lex_extreme_strategy(U, value, detail::Player::Y,
                                          detail::LexOrder::Max, face_tol);
  x = detail::clean_probabilities(x, tol);
  y = detail::clean_probabilities(y, tol);
  detail::prune_non_best_responses(U, value, x, y, tol);
  auto sx = detail::support_of(x, tol);
  auto sy = detail::support_of(y, tol);
  detail::polish(U, x, y, sx, sy);

  EquilibriumInfo info;
  info.x_star = x;
  info.y_star = y;
  info.value = x.dot(U.u() * y);
  info.support_x = std::move(sx);
  info.support_y = std::move(sy);
  info.null_space_coeffs = column_null_space(U, tol);
  info.degenerate = !info.null_space_coeffs.empty();

  if (!verify_equilibrium(U, x, y, std::max(tol, 1e-7)).is_equilibrium)
    throw SolverError("LP result fails the equilibrium check (solver bug)");
  return info;
}

/// Both players' equilibrium sets as segments between their lexicographically
/// smallest and largest optimal strategies. Returns nothing unless the game is
/// degenerate and both sets are non-trivial.
inline std::optional<EquilibriumSegmentParam> equilibrium_segment(
    const PayoffMatrix& U, const EquilibriumInfo& info, double tol = 1e-9) {
  if (!info.degenerate) return std::nullopt;
  const double face_tol = 1e-2 * tol * detail::payoff_scale(U);
  auto extreme = [&](detail::Player p, detail::LexOrder o) {
    return detail::clean_probabilities(
        detail::lex_extreme_strategy(U, info.value, p, o, face_tol), tol);
  };
  EquilibriumSegmentParam seg;
  seg.alt_x = extreme(detail::Player::X, detail::LexOrder::Max);
  seg.base_x = extreme(detail::Player::X, detail::LexOrder::Min);
  seg.alt_y = extreme(detail::Player::Y, detail::LexOrder::Max);
  seg.base_y = extreme(detail::Player::Y, detail::LexOrder::Min);
  const double min_sep = 1e-6;
  if (max_abs(seg.base_x - seg.alt_x) < min_sep ||
      max_abs(seg.base_y - seg.alt_y) < min_sep)
    return std::nullopt;

  auto locate = [](const Vector& p, const Vector& base, const Vector& alt) {
    const Vector d = base - alt;
    return std::clamp(d.dot(p - alt) / d.squaredNorm(), 0.0, 1.0);
  };
  seg.r_x = locate(info.x_star, seg.base_x, seg.alt_x);
  seg.r_y = locate(info.y_star, seg.base_y, seg.alt_y);
  return seg;
}

// --- JSON ----------------------------------------------------------------

inline nlohmann::json to_json(const PayoffMatrix& U) {
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < U.rows(); ++i)
    for (int j = 0; j < U.cols(); ++j) entries.push_back(U(i, j));
  nlohmann::json j = {{"rows", U.rows()}, {"cols", U.cols()},
                      {"entries", entries}};
  j["variant"] = U.variant() ? nlohmann::json(*U.variant()) : nlohmann::json(nullptr);
  j["seed"] = U.seed() ? nlohmann::json(*U.seed()) : nlohmann::json(nullptr);
  return j;
}

inline PayoffMatrix payoff_from_json(const nlohmann::json& j) {
  try {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    const auto& entries = j.at("entries");
    if (rows < 2 || cols < 2 || rows > kMaxActions || cols > kMaxActions)
      throw ConfigError("game: rows/cols out of range");
    if (!entries.is_array() ||
        entries.size() != static_cast<std::size_t>(rows * cols))
      throw ConfigError("game: entries must hold rows*cols numbers");
    Matrix u(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int c = 0; c < cols; ++c)
        u(i, c) = entries.at(static_cast<std::size_t>(i * cols + c)).get<double>();
    std::optional<std::string> variant;
    std::optional<std::uint64_t> seed;
    if (j.contains("variant") && !j["variant"].is_null())
      variant = j["variant"].get<std::string>();
    if (j.contains("seed") && !j["seed"].is_null())
      seed = j["seed"].get<std::uint64_t>();
    return PayoffMatrix(u, variant, seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("game: ") + e.what());
  }
}

inline nlohmann::json to_json(const EquilibriumInfo& info) {
  auto vec = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  nlohmann::json null_space = nlohmann::json::array();
  for (const auto& a : info.null_space_coeffs) null_space.push_back(vec(a));
  return {{"x_star", vec(info.x_star)},
          {"y_star", vec(info.y_star)},
          {"value", info.value},
          {"support_x", info.support_x},
          {"support_y", info.support_y},
          {"degenerate", info.degenerate},
          {"null_space_coeffs", null_space}};
}

}  // namespace memasym

#endif  // MEMASYM_GAME_HPP
