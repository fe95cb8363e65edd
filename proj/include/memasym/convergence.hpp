#ifndef MEMASYM_CONVERGENCE_HPP
#define MEMASYM_CONVERGENCE_HPP

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

#include "memasym/dynamics.hpp"
#include "memasym/game.hpp"
#include "memasym/linalg.hpp"

namespace memasym {

struct ConvergenceReport {
  bool converged_y = false;
  bool converged_x_st = false;
  double final_dist_y = 0.0;
  double final_dist_x_st = 0.0;
  // Distance of y(T) to Y's equilibrium segment; equals final_dist_y when
  // the equilibrium is isolated.
  double dist_to_eq_set = 0.0;
  double osc_amplitude_y = 0.0;
  double osc_amplitude_x_st = 0.0;
  std::optional<double> time_to_tol;
};

// x^st of a trajectory point; memoryless baselines store x as one column.
inline Vector point_x_st(const TrajectoryPoint& p) {
  return p.X.cols() == 1 ? Vector(p.X.col(0)) : Vector(p.X * p.y);
}

/// min over r in [0, 1] of |y - y*(r)|_inf. The objective is convex in r, so
/// a coarse grid followed by ternary refinement finds the minimum.
inline double distance_to_segment(const Vector& y,
                                  const EquilibriumSegmentParam& seg) {
  auto dist = [&](double r) { return max_abs(y - seg.y_at(r)); };
  constexpr int grid = 100;
  int best = 0;
  for (int k = 1; k <= grid; ++k)
    if (dist(k / double(grid)) < dist(best / double(grid))) best = k;
  double lo = std::max(0.0, (best - 1) / double(grid));
  double hi = std::min(1.0, (best + 1) / double(grid));
  for (int it = 0; it < 100; ++it) {
    const double a = lo + (hi - lo) / 3.0;
    const double b = hi - (hi - lo) / 3.0;
    if (dist(a) < dist(b))
      hi = b;
    else
      lo = a;
  }
  return std::min(dist(0.5 * (lo + hi)), dist(best / double(grid)));
}

inline ConvergenceReport detect_convergence(
    const Trajectory& traj, const EquilibriumInfo& eq,
    const std::optional<EquilibriumSegmentParam>& segment, double tol,
    double window_frac) {
  ConvergenceReport rep;
  if (traj.points.empty()) return rep;
  const auto& last = traj.back();
  rep.final_dist_y = max_abs(last.y - eq.y_star);
  rep.final_dist_x_st = max_abs(point_x_st(last) - eq.x_star);

  auto dist_y = [&](const Vector& y) {
    return segment ? distance_to_segment(y, *segment) : max_abs(y - eq.y_star);
  };
  rep.dist_to_eq_set = dist_y(last.y);

  const std::size_t n = traj.points.size();
  const auto window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(window_frac * static_cast<double>(n))));
  Vector y_lo = last.y, y_hi = last.y;
  Vector x_lo = point_x_st(last), x_hi = x_lo;
  for (std::size_t k = n - std::min(window, n); k < n; ++k) {
    const auto& p = traj.points[k];
    const Vector xs = point_x_st(p);
    y_lo = y_lo.cwiseMin(p.y);
    y_hi = y_hi.cwiseMax(p.y);
    x_lo = x_lo.cwiseMin(xs);
    x_hi = x_hi.cwiseMax(xs);
  }
  rep.osc_amplitude_y = max_abs(y_hi - y_lo);
  rep.osc_amplitude_x_st = max_abs(x_hi - x_lo);

  rep.converged_y = rep.dist_to_eq_set < tol && rep.osc_amplitude_y < tol;
  rep.converged_x_st =
      rep.final_dist_x_st < tol && rep.osc_amplitude_x_st < tol;

  // Earliest sample after which y stays within tol of the equilibrium (set).
  std::optional<double> entered;
  for (const auto& p : traj.points) {
    if (dist_y(p.y) < tol) {
      if (!entered) entered = p.t;
    } else {
      entered.reset();
    }
  }
  rep.time_to_tol = entered;
  return rep;
}

inline nlohmann::json to_json(const ConvergenceReport& r) {
  nlohmann::json j = {{"converged_y", r.converged_y},
                      {"converged_x_st", r.converged_x_st},
                      {"final_dist_y", r.final_dist_y},
                      {"final_dist_x_st", r.final_dist_x_st},
                      {"dist_to_eq_set", r.dist_to_eq_set},
                      {"osc_amplitude_y", r.osc_amplitude_y},
                      {"osc_amplitude_x_st", r.osc_amplitude_x_st}};
  j["time_to_tol"] =
      r.time_to_tol ? nlohmann::json(*r.time_to_tol) : nlohmann::json(nullptr);
  return j;
}

}  // namespace memasym

#endif  // MEMASYM_CONVERGENCE_HPP
