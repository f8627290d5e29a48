#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "jsqd/error.hpp"

namespace jsqd {

/// Tolerance used when deciding membership of a floating-point vector in U.
inline constexpr double kTailTolerance = 1e-12;

/// The system (N, C, d, sigma, beta). Per-server arrival rate is
/// lambda_N = sigma - beta / sqrt(N); construction fails unless it is positive.
class ModelParams {
 public:
  ModelParams(std::int64_t servers, int capacity, int choices, double sigma,
              double beta);

  std::int64_t servers() const noexcept { return servers_; }
  int capacity() const noexcept { return capacity_; }
  int choices() const noexcept { return choices_; }
  double sigma() const noexcept { return sigma_; }
  double beta() const noexcept { return beta_; }

  /// sigma - beta / sqrt(N).
  double arrival_rate() const noexcept { return arrival_rate_; }

  /// Same (C, d, sigma, beta) with a different server count.
  ModelParams with_servers(std::int64_t servers) const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::int64_t servers_;
  int capacity_;
  int choices_;
  double sigma_;
  double beta_;
  double arrival_rate_;
};

double arrival_rate(const ModelParams& params);

/// A point of U: u[0] = 1 >= u[1] >= ... >= u[C] >= 0. u[n] is the fraction
/// of servers holding at least n jobs. u[C+1] is implicitly zero.
class OccupancyTail {
 public:
  /// Validates and clamps within kTailTolerance; throws kInvalidState beyond.
  explicit OccupancyTail(std::vector<double> values);

  /// All servers empty: (1, 0, ..., 0).
  static OccupancyTail empty(int capacity);
  /// All servers full: (1, 1, ..., 1).
  static OccupancyTail full(int capacity);
  /// Tail of a probability vector p over {0..C}.
  static OccupancyTail from_distribution(std::span<const double> p);

  int capacity() const noexcept { return static_cast<int>(values_.size()) - 1; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t n) const noexcept { return values_[n]; }
  /// u[n] with the convention u[C+1] = 0.
  double at_or_zero(std::size_t n) const noexcept {
    return n < values_.size() ? values_[n] : 0.0;
  }

  std::span<const double> values() const noexcept { return values_; }
  /// Probability mass p_n = u_n - u_{n+1}.
  std::vector<double> distribution() const;

  friend bool operator==(const OccupancyTail&, const OccupancyTail&) = default;

 private:
  std::vector<double> values_;
};

/// A point of V: r[0] = 0, r[1..C] real.
class FluctuationVector {
 public:
  /// Zero vector of length C+1.
  explicit FluctuationVector(int capacity);
  /// Throws kInvalidState if values[0] != 0.
  explicit FluctuationVector(std::vector<double> values);
  /// Builds (0, interior[0], ..., interior[C-1]).
  static FluctuationVector from_interior(const Eigen::VectorXd& interior);

  int capacity() const noexcept { return static_cast<int>(values_.size()) - 1; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t n) const noexcept { return values_[n]; }
  /// Components 1..C; component 0 is fixed.
  double& interior(std::size_t n) noexcept { return values_[n]; }

  std::span<const double> values() const noexcept { return values_; }
  /// Components 1..C as an Eigen vector of length C.
  Eigen::VectorXd interior_vector() const;

  friend bool operator==(const FluctuationVector&,
                         const FluctuationVector&) = default;

 private:
  std::vector<double> values_;
};

/// (W1(u))_n = sigma (u_{n-1}^d - u_n^d).
FluctuationVector w1(const OccupancyTail& u, const ModelParams& params);
/// (W2(u))_n = n (u_n - u_{n+1}).
FluctuationVector w2(const OccupancyTail& u);
/// (W3(u))_n = beta (u_{n-1}^d - u_n^d).
FluctuationVector w3(const OccupancyTail& u, const ModelParams& params);

/// Mean-field right-hand side h(u) = W1(u) - W2(u).
FluctuationVector drift(const OccupancyTail& u, const ModelParams& params);

/// The same right-hand side evaluated on raw components u[0..C] (u[0] = 1),
/// without a U-membership check. Used by integrators on trial stages.
void drift_unchecked(std::span<const double> u, const ModelParams& params,
                     std::span<double> out);

/// C x C tridiagonal linearization H(a) of the mean-field drift on V.
/// Sub-diagonal gamma_i = sigma d a_i^{d-1}, diagonal -(gamma_i + i),
/// super-diagonal i (row i, 1-based).
class DriftMatrix {
 public:
  explicit DriftMatrix(Eigen::MatrixXd matrix);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  int capacity() const noexcept { return static_cast<int>(matrix_.rows()); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }

  /// H applied to a fluctuation vector; component 0 stays 0.
  FluctuationVector apply(const FluctuationVector& v) const;

 private:
  Eigen::MatrixXd matrix_;
};

DriftMatrix build_drift_matrix(const OccupancyTail& a, const ModelParams& params);
/// Same, from raw tail components (no membership check).
Eigen::MatrixXd drift_matrix_unchecked(std::span<const double> a,
                                       const ModelParams& params);

/// Lipschitz constant of W on U in the Euclidean norm: 2 (d sigma + C).
/// The tighter-looking 2 d sqrt(sigma^2 + C^2) fails already for d = 1,
/// where W is affine (C = 5, sigma = 10 exceeds it by about 10%).
double drift_lipschitz_bound(const ModelParams& params);
/// Operator-norm bound on H(a): sqrt(32 (sigma^2 d^2 + C^2)).
double drift_matrix_norm_bound(const ModelParams& params);
/// Spectral norm (largest singular value).
double operator_norm(const DriftMatrix& h);

}  // namespace jsqd
