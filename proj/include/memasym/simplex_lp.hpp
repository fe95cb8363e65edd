#ifndef MEMASYM_SIMPLEX_LP_HPP
#define MEMASYM_SIMPLEX_LP_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace memasym::lp {

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Constraint {
  Eigen::VectorXd coeffs;
  Relation relation;
  double rhs;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
  Status status = Status::Infeasible;
  Eigen::VectorXd z;
  double objective = 0.0;
};

// maximize c.z  subject to the given constraints and z >= 0.
//
// Dense two-phase tableau simplex with Bland's anti-cycling rule. Intended for
// the handful-of-variables problems that arise from small matrix games; no
// attempt is made at sparsity or numerical refactorization.
class Problem {
 public:
  explicit Problem(Eigen::VectorXd objective) : c_(std::move(objective)) {}

  void add(Eigen::VectorXd coeffs, Relation rel, double rhs) {
    constraints_.push_back({std::move(coeffs), rel, rhs});
  }

  int num_vars() const { return static_cast<int>(c_.size()); }

  Solution solve(double eps = 1e-11) const;

 private:
  Eigen::VectorXd c_;
  std::vector<Constraint> constraints_;
};

namespace detail {

class Tableau {
 public:
  Tableau(int rows, int cols) : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)) {}

  double& at(int r, int k) { return t_(r, k); }
  double& rhs(int r) { return t_(r, t_.cols() - 1); }
  double& obj(int k) { return t_(t_.rows() - 1, k); }
  double obj_value() const { return -t_(t_.rows() - 1, t_.cols() - 1); }
  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }

  void pivot(int pr, int pc) {
    t_.row(pr) /= t_(pr, pc);
    for (int r = 0; r < t_.rows(); ++r) {
      if (r == pr) continue;
      const double f = t_(r, pc);
      if (f != 0.0) t_.row(r) -= f * t_.row(pr);
    }
  }

  // Loads objective coefficients and prices out the current basis.
  void set_objective(const Eigen::VectorXd& cost, const std::vector<int>& basis) {
    const int last = static_cast<int>(t_.rows()) - 1;
    t_.row(last).setZero();
    for (int k = 0; k < cost.size(); ++k) t_(last, k) = cost(k);
    for (int r = 0; r < rows(); ++r) {
      const double f = t_(last, basis[r]);
      if (f != 0.0) t_.row(last) -= f * t_.row(r);
    }
  }

 private:
  Eigen::MatrixXd t_;
};

// Runs simplex iterations on columns [0, usable). Returns false if unbounded.
inline bool run(Tableau& tab, std::vector<int>& basis, int usable, double eps) {
  const int max_iter = 10000;
  for (int iter = 0; iter < max_iter; ++iter) {
    int enter = -1;
    for (int k = 0; k < usable; ++k) {
      if (tab.obj(k) > eps) {
        enter = k;
        break;
      }
    }
    if (enter < 0) return true;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < tab.rows(); ++r) {
      const double a = tab.at(r, enter);
      if (a <= eps) continue;
      const double ratio = tab.rhs(r) / a;
      if (ratio < best - eps ||
          (std::abs(ratio - best) <= eps && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave < 0) return false;
    tab.pivot(leave, enter);
    basis[leave] = enter;
  }
  return true;  // Bland's rule terminates; the cap only guards round-off loops.
}

}  // namespace detail

inline Solution Problem::solve(double eps) const {
  const int n = num_vars();
  const int m = static_cast<int>(constraints_.size());

  int n_slack = 0;
  int n_art = 0;
  for (const auto& con : constraints_) {
    const bool flip = con.rhs < 0.0;
    Relation rel = con.relation;
    if (flip && rel != Relation::Equal)
      rel = rel == Relation::LessEqual ? Relation::GreaterEqual
                                       : Relation::LessEqual;
    if (rel != Relation::Equal) ++n_slack;
    if (rel != Relation::LessEqual) ++n_art;
  }

  const int art0 = n + n_slack;
  detail::Tableau tab(m, n + n_slack + n_art);
  std::vector<int> basis(m);
  int slack = n;
  int art = art0;
  for (int r = 0; r < m; ++r) {
    const auto& con = constraints_[r];
    const double sign = con.rhs < 0.0 ? -1.0 : 1.0;
    Relation rel = con.relation;
    if (sign < 0.0 && rel != Relation::Equal)
      rel = rel == Relation::LessEqual ? Relation::GreaterEqual
                                       : Relation::LessEqual;
    for (int k = 0; k < n; ++k) tab.at(r, k) = sign * con.coeffs(k);
    tab.rhs(r) = sign * con.rhs;
    if (rel == Relation::LessEqual) {
      tab.at(r, slack) = 1.0;
      basis[r] = slack++;
    } else {
      if (rel == Relation::GreaterEqual) tab.at(r, slack++) = -1.0;
      tab.at(r, art) = 1.0;
      basis[r] = art++;
    }
  }

  Solution sol;
  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(tab.cols());
    phase1.segment(art0, n_art).setConstant(-1.0);
    tab.set_objective(phase1, basis);
    detail::run(tab, basis, tab.cols(), eps);
    if (tab.obj_value() < -1e3 * eps) {
      sol.status = Status::Infeasible;
      return sol;
    }
    // Drive zero-level artificials out of the basis.
    for (int r = 0; r < m; ++r) {
      if (basis[r] < art0) continue;
      for (int k = 0; k < art0; ++k) {
        if (std::abs(tab.at(r, k)) > eps) {
          tab.pivot(r, k);
          basis[r] = k;
          break;
        }
      }
    }
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(tab.cols());
  cost.head(n) = c_;
  tab.set_objective(cost, basis);
  if (!detail::run(tab, basis, art0, eps)) {
    sol.status = Status::Unbounded;
    return sol;
  }

  sol.status = Status::Optimal;
  sol.z = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r)
    if (basis[r] < n) sol.z(basis[r]) = tab.rhs(r);
  sol.objective = c_.dot(sol.z);
  return sol;
}

}  // namespace memasym::lp

#endif  // MEMASYM_SIMPLEX_LP_HPP
