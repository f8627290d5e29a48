#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "jsqd/meanfield.hpp"
#include "jsqd/model.hpp"

namespace jsqd {

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;
  double max_real_part = 0.0;
};

/// Eigenvalues of H, sorted by decreasing real part.
SpectrumReport eigen_diagnostics(const DriftMatrix& h);

/// e^{H t} v. Scaling-and-squaring Pade approximant.
Eigen::VectorXd matrix_exponential_apply(const Eigen::MatrixXd& h, double t,
                                         const Eigen::VectorXd& v);
FluctuationVector matrix_exponential_apply(const DriftMatrix& h, double t,
                                           const FluctuationVector& v);

/// Noise intensities V_0 = 0, V_i = 2 i (pi_i - pi_{i+1}).
std::vector<double> noise_intensities(const OccupancyTail& pi);

/// Stationary mean of Q(t) = Q(0) + int H(pi) Q ds - int W3(pi) ds + B(t):
/// the solution of H(pi) kappa = W3(pi). For beta > 0 every component is <= 0.
/// Throws kNumerical if H(pi) is not Hurwitz or the solve is singular.
FluctuationVector stationary_kappa(const FixedPoint& fp, const ModelParams& params);

/// Stationary covariance: H Sigma + Sigma H^T + diag(V) = 0, solved as the
/// vectorized C^2 x C^2 linear system.
Eigen::MatrixXd stationary_covariance(const FixedPoint& fp, const ModelParams& params);

struct OUStationaryStats {
  FluctuationVector kappa;
  Eigen::MatrixXd sigma;
  std::vector<double> noise;
  SpectrumReport spectrum;
};

OUStationaryStats stationary_stats(const FixedPoint& fp, const ModelParams& params);

/// max |H Sigma + Sigma H^T + diag(V)|.
double lyapunov_residual(const Eigen::MatrixXd& h, const Eigen::MatrixXd& sigma,
                         const std::vector<double>& noise);

struct OUMomentTrajectory {
  std::vector<double> times;
  std::vector<OccupancyTail> mean_field;
  std::vector<FluctuationVector> mean;
  std::vector<Eigen::MatrixXd> cov;
};

/// Co-integrates, with RK4 on a shared grid,
///   x' = h(x),
///   m' = H(x) m - W3(x),
///   S' = H(x) S + S H(x)^T + diag(W1(x) + W2(x)).
OUMomentTrajectory transient_ou_moments(const OccupancyTail& u0,
                                        const FluctuationVector& m0,
                                        const Eigen::MatrixXd& s0,
                                        const ModelParams& params, double t_end,
                                        double dt);

}  // namespace jsqd
