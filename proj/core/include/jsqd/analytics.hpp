#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "jsqd/meanfield.hpp"
#include "jsqd/model.hpp"
#include "jsqd/simulator.hpp"

namespace jsqd {

/// Erlang-B blocking of an M/M/n/n system with offered load alpha, by the
/// recursion B_0 = 1, B_k = alpha B_{k-1} / (k + alpha B_{k-1}).
double erlang_b(double alpha, std::int64_t n);

double normal_pdf(double x);
/// Standard normal CDF through erfc (accurate in the lower tail).
double normal_cdf(double x);

/// phi(beta) / (sqrt(C) Phi(beta)).
double halfin_whitt_limit(double beta, int capacity);

struct BlockingReport {
  std::int64_t servers = 0;
  double pi_c_d = 0.0;
  /// (1 / (sigma sqrt N)) sum_{i=0}^{C} i (kappa_i - kappa_{i+1}).
  double kappa_term = 0.0;
  /// (beta / (sigma sqrt N)) (1 - pi_C^d).
  double beta_term = 0.0;
  /// pi_c_d - kappa_term - beta_term.
  double first_order = 0.0;
  std::optional<double> simulated;
  std::optional<double> simulated_ci_halfwidth;
};

/// First-order blocking approximation at the params' N.
BlockingReport blocking_approximation(const FixedPoint& fp, const FluctuationVector& kappa,
                                      const ModelParams& params);

/// sum_{i=0}^{C} i (kappa_i - kappa_{i+1}) with kappa_{C+1} = 0, summed as written.
double weighted_kappa_sum(const FluctuationVector& kappa);

/// lim sqrt(N) (P_block - pi_C^d) = -(sum kappa_i)/sigma - beta (1 - pi_C^d)/sigma.
double scaling_constant(const FixedPoint& fp, const FluctuationVector& kappa,
                        const ModelParams& params);

struct ScalingRow {
  std::int64_t servers = 0;
  double simulated = 0.0;
  double ci_halfwidth = 0.0;
  double pi_c_d = 0.0;
  double first_order = 0.0;
  double scaled_error_mean_field = 0.0;  // sqrt(N) (simulated - pi_C^d)
  double theoretical_constant = 0.0;
  double scaled_error_first_order = 0.0;  // sqrt(N) (simulated - first_order)
};

/// For each N in `servers` (increasing), re-targets `sim_template` to N and
/// compares simulated blocking with pi_C^d and the first-order correction.
std::vector<ScalingRow> error_scaling_experiment(const ModelParams& params_template,
                                                 const std::vector<std::int64_t>& servers,
                                                 const SimConfig& sim_template);

/// Empirical moments of fluctuation samples.
struct FluctuationSummary {
  std::size_t count = 0;
  Eigen::VectorXd mean;           // components 1..C
  Eigen::MatrixXd cov;            // unbiased sample covariance
  Eigen::VectorXd standard_error; // of the mean, per component
};

/// With batches == 0 the samples are treated as independent. Otherwise the
/// standard error comes from `batches` equal consecutive batch means, which
/// absorbs serial correlation in samples taken along one chain.
FluctuationSummary summarize_fluctuations(std::span<const FluctuationSample> samples,
                                          std::size_t batches = 0);

/// Columns: N,simulated,pi_C_d,first_order,sqrtN_err_mean_field,
/// theoretical_constant,sqrtN_err_first_order,ci_halfwidth.
void write_scaling_csv(std::ostream& os, const std::vector<ScalingRow>& rows);

}  // namespace jsqd
