#include "jsqd/model.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "power.hpp"

namespace jsqd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameters: return "invalid-parameters";
    case ErrorKind::kInvalidState: return "invalid-state";
    case ErrorKind::kIntegrationInstability: return "integration-instability";
    case ErrorKind::kNonConvergence: return "non-convergence";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kDegenerateRun: return "degenerate-run";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

ModelParams::ModelParams(std::int64_t servers, int capacity, int choices,
                         double sigma, double beta)
    : servers_(servers),
      capacity_(capacity),
      choices_(choices),
      sigma_(sigma),
      beta_(beta),
      arrival_rate_(0.0) {
  if (servers < 1 || capacity < 1 || choices < 1) {
    throw Error(ErrorKind::kInvalidParameters,
                "N, C and d must all be at least 1");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(beta)) {
    throw Error(ErrorKind::kInvalidParameters,
                "sigma must be positive and beta finite");
  }
  arrival_rate_ = sigma - beta / std::sqrt(static_cast<double>(servers));
  if (!(arrival_rate_ > 0.0)) {
    std::ostringstream os;
    os << "arrival rate sigma - beta/sqrt(N) = " << arrival_rate_
       << " is not positive";
    throw Error(ErrorKind::kInvalidParameters, os.str());
  }
}

ModelParams ModelParams::with_servers(std::int64_t servers) const {
  return ModelParams(servers, capacity_, choices_, sigma_, beta_);
}

double arrival_rate(const ModelParams& params) { return params.arrival_rate(); }

OccupancyTail::OccupancyTail(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw Error(ErrorKind::kInvalidState, "tail vector needs length C+1 >= 2");
  }
  if (std::abs(values_[0] - 1.0) > kTailTolerance) {
    throw Error(ErrorKind::kInvalidState, "tail vector must have u[0] = 1");
  }
  values_[0] = 1.0;
  for (std::size_t n = 1; n < values_.size(); ++n) {
    double& v = values_[n];
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kInvalidState, "tail vector has non-finite entry");
    }
    const double upper = values_[n - 1];
    if (v > upper) {
      if (v - upper > kTailTolerance) {
        std::ostringstream os;
        os << "tail vector not monotone at n=" << n << " (" << upper << " < "
           << v << ")";
        throw Error(ErrorKind::kInvalidState, os.str());
      }
      v = upper;
    }
    if (v < 0.0) {
      if (-v > kTailTolerance) {
        std::ostringstream os;
        os << "tail vector negative at n=" << n << " (" << v << ")";
        throw Error(ErrorKind::kInvalidState, os.str());
      }
      v = 0.0;
    }
  }
}

OccupancyTail OccupancyTail::empty(int capacity) {
  std::vector<double> u(static_cast<std::size_t>(capacity) + 1, 0.0);
  u[0] = 1.0;
  return OccupancyTail(std::move(u));
}

OccupancyTail OccupancyTail::full(int capacity) {
  return OccupancyTail(
      std::vector<double>(static_cast<std::size_t>(capacity) + 1, 1.0));
}

OccupancyTail OccupancyTail::from_distribution(std::span<const double> p) {
  std::vector<double> u(p.size(), 0.0);
  double tail = 0.0;
  for (std::size_t n = p.size(); n-- > 0;) {
    tail += p[n];
    u[n] = tail;
  }
  if (!u.empty()) u[0] = 1.0;
  return OccupancyTail(std::move(u));
}

std::vector<double> OccupancyTail::distribution() const {
  std::vector<double> p(values_.size());
  for (std::size_t n = 0; n < values_.size(); ++n) {
    p[n] = values_[n] - at_or_zero(n + 1);
  }
  return p;
}

FluctuationVector::FluctuationVector(int capacity)
    : values_(static_cast<std::size_t>(capacity) + 1, 0.0) {}

FluctuationVector::FluctuationVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw Error(ErrorKind::kInvalidState,
                "fluctuation vector needs length C+1 >= 2");
  }
  if (values_[0] != 0.0) {
    throw Error(ErrorKind::kInvalidState, "fluctuation vector must have r[0] = 0");
  }
}

FluctuationVector FluctuationVector::from_interior(const Eigen::VectorXd& interior) {
  std::vector<double> r(static_cast<std::size_t>(interior.size()) + 1, 0.0);
  for (Eigen::Index i = 0; i < interior.size(); ++i) {
    r[static_cast<std::size_t>(i) + 1] = interior(i);
  }
  return FluctuationVector(std::move(r));
}

Eigen::VectorXd FluctuationVector::interior_vector() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values_.size()) - 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = values_[static_cast<std::size_t>(i) + 1];
  }
  return v;
}

namespace {

// (u_{n-1}^d - u_n^d) for n = 1..C, written into out[1..C].
void arrival_flux(std::span<const double> u, int d, std::span<double> out) {
  out[0] = 0.0;
  double prev = detail::ipow(u[0], d);
  for (std::size_t n = 1; n < u.size(); ++n) {
    const double cur = detail::ipow(u[n], d);
    out[n] = prev - cur;
    prev = cur;
  }
}

}  // namespace

FluctuationVector w1(const OccupancyTail& u, const ModelParams& params) {
  std::vector<double> r(u.size());
  arrival_flux(u.values(), params.choices(), r);
  for (double& x : r) x *= params.sigma();
  return FluctuationVector(std::move(r));
}

FluctuationVector w2(const OccupancyTail& u) {
  std::vector<double> r(u.size(), 0.0);
  for (std::size_t n = 1; n < u.size(); ++n) {
    r[n] = static_cast<double>(n) * (u[n] - u.at_or_zero(n + 1));
  }
  return FluctuationVector(std::move(r));
}

FluctuationVector w3(const OccupancyTail& u, const ModelParams& params) {
  std::vector<double> r(u.size());
  arrival_flux(u.values(), params.choices(), r);
  for (double& x : r) x *= params.beta();
  r[0] = 0.0;
  return FluctuationVector(std::move(r));
}

void drift_unchecked(std::span<const double> u, const ModelParams& params,
                     std::span<double> out) {
  const std::size_t size = u.size();
  const int d = params.choices();
  const double sigma = params.sigma();
  out[0] = 0.0;
  double prev = detail::ipow(u[0], d);
  for (std::size_t n = 1; n < size; ++n) {
    const double cur = detail::ipow(u[n], d);
    const double next = n + 1 < size ? u[n + 1] : 0.0;
    out[n] = sigma * (prev - cur) - static_cast<double>(n) * (u[n] - next);
    prev = cur;
  }
}

FluctuationVector drift(const OccupancyTail& u, const ModelParams& params) {
  std::vector<double> r(u.size());
  drift_unchecked(u.values(), params, r);
  return FluctuationVector(std::move(r));
}

DriftMatrix::DriftMatrix(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1) {
    throw Error(ErrorKind::kInvalidState, "drift matrix must be square, C >= 1");
  }
}

FluctuationVector DriftMatrix::apply(const FluctuationVector& v) const {
  return FluctuationVector::from_interior(matrix_ * v.interior_vector());
}

Eigen::MatrixXd drift_matrix_unchecked(std::span<const double> a,
                                       const ModelParams& params) {
  const int c = static_cast<int>(a.size()) - 1;
  const int d = params.choices();
  const double sd = params.sigma() * d;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(c, c);
  for (int i = 1; i <= c; ++i) {
    // d == 1 gives gamma_i = sigma regardless of a_i (0^0 := 1).
    const double gamma = d == 1 ? sd : sd * detail::ipow(a[i], d - 1);
    h(i - 1, i - 1) = -(gamma + i);
    if (i < c) {
      h(i - 1, i) = i;
      h(i, i - 1) = gamma;
    }
  }
  return h;
}

DriftMatrix build_drift_matrix(const OccupancyTail& a, const ModelParams& params) {
  if (a.capacity() != params.capacity()) {
    throw Error(ErrorKind::kInvalidState, "tail length does not match C");
  }
  return DriftMatrix(drift_matrix_unchecked(a.values(), params));
}

double drift_lipschitz_bound(const ModelParams& params) {
  // |a^d - b^d| <= d |a - b| on [0, 1]; each operator touches two adjacent levels.
  return 2.0 * (params.choices() * params.sigma() + params.capacity());
}

double drift_matrix_norm_bound(const ModelParams& params) {
  const double sd = params.sigma() * params.choices();
  const double c = params.capacity();
  return std::sqrt(32.0 * (sd * sd + c * c));
}

double operator_norm(const DriftMatrix& h) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.matrix());
  return svd.singularValues()(0);
}

}  // namespace jsqd
