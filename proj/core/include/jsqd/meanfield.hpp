#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "jsqd/model.hpp"

namespace jsqd {

/// Mean-field solution sampled on a fixed time grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<OccupancyTail> states;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Default RK4 step: 1e-3 * min(1, 1/sigma, 1/C).
double default_time_step(const ModelParams& params);

/// Time grid {0, dt, 2dt, ...} ending exactly at t_end (the final step is
/// shortened when t_end is not a multiple of dt).
std::vector<double> time_grid(double t_end, double dt);

/// Integrates x' = h(x) from u0 with classical fixed-step RK4.
/// Throws kIntegrationInstability if a step leaves U beyond kTailTolerance.
Trajectory integrate_mean_field(const OccupancyTail& u0, const ModelParams& params,
                                double t_end, double dt);

/// Theta: probability vector over {0..C} -> birth rates r_0..r_C with
/// r_n = sigma (T_n^d - T_{n+1}^d) / (T_n - T_{n+1}), T_n the tail of p.
/// When p_n = 0 the limit sigma d T_{n+1}^{d-1} is used.
std::vector<double> theta_map(std::span<const double> p, const ModelParams& params);

/// Xi-hat: birth rates r -> stationary law of the birth-death chain on {0..C}
/// with birth rate r_n in state n and death rate n.
std::vector<double> xi_hat_map(std::span<const double> rates);

struct FixedPoint {
  OccupancyTail pi;
  /// lambda_hat_n = sigma (pi_n^d - pi_{n+1}^d) / (pi_n - pi_{n+1}), n = 0..C-1.
  std::vector<double> lambda_hat;
  /// max_n |sigma (pi_{n-1}^d - pi_n^d) - n (pi_n - pi_{n+1})|.
  double residual = 0.0;
  int iterations = 0;
};

struct FixedPointOptions {
  double tol = 1e-12;
  int max_iter = 100000;
  /// Starting distribution; uniform over {0..C} when empty.
  std::optional<std::vector<double>> start;
};

/// Balance-equation defect of a candidate fixed point.
double fixed_point_residual(const OccupancyTail& pi, const ModelParams& params);

/// Iterates p <- Xi-hat(Theta(p)) until successive iterates differ by less
/// than tol in max-norm and the balance residual is at most 10 tol.
/// Throws kNonConvergence after max_iter iterations.
FixedPoint fixed_point(const ModelParams& params, const FixedPointOptions& options = {});

/// CSV with header t,u1,...,uC.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace jsqd
