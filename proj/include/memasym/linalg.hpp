#ifndef MEMASYM_LINALG_HPP
#define MEMASYM_LINALG_HPP

#include <Eigen/Dense>

#include <cmath>

namespace memasym {

// Games in this library are small (the benchmark games are at most 4x4), so
// all matrices use fixed maximum storage and never touch the heap in the
// integrator's inner loop.
inline constexpr int kMaxActions = 8;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::ColMajor, kMaxActions, kMaxActions>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor,
                             kMaxActions, 1>;

inline Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v(k++) = x;
  return v;
}

// Row-major literal, e.g. make_matrix({{1, -1}, {-1, 1}}).
inline Matrix make_matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  const auto n_cols =
      n_rows == 0 ? Eigen::Index{0}
                  : static_cast<Eigen::Index>(rows.begin()->size());
  Matrix m(n_rows, n_cols);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

inline double max_abs(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace memasym

#endif  // MEMASYM_LINALG_HPP
