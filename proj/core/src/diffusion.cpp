#include "jsqd/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "power.hpp"

namespace jsqd {

SpectrumReport eigen_diagnostics(const DriftMatrix& h) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(h.matrix(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "eigenvalue computation failed");
  }
  SpectrumReport report;
  const auto& ev = solver.eigenvalues();
  report.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
            [](const auto& a, const auto& b) {
              if (a.real() != b.real()) return a.real() > b.real();
              return a.imag() > b.imag();
            });
  report.max_real_part = report.eigenvalues.front().real();
  return report;
}

Eigen::VectorXd matrix_exponential_apply(const Eigen::MatrixXd& h, double t,
                                         const Eigen::VectorXd& v) {
  if (!(t >= 0.0)) {
    throw Error(ErrorKind::kInvalidParameters, "matrix exponential needs t >= 0");
  }
  if (t == 0.0) return v;
  const Eigen::MatrixXd scaled = h * t;
  return scaled.exp() * v;
}

FluctuationVector matrix_exponential_apply(const DriftMatrix& h, double t,
                                           const FluctuationVector& v) {
  return FluctuationVector::from_interior(
      matrix_exponential_apply(h.matrix(), t, v.interior_vector()));
}

std::vector<double> noise_intensities(const OccupancyTail& pi) {
  std::vector<double> v(pi.size(), 0.0);
  for (std::size_t i = 1; i < pi.size(); ++i) {
    v[i] = 2.0 * static_cast<double>(i) * (pi[i] - pi.at_or_zero(i + 1));
  }
  return v;
}

namespace {

DriftMatrix hurwitz_drift_matrix(const FixedPoint& fp, const ModelParams& params) {
  DriftMatrix h = build_drift_matrix(fp.pi, params);
  const SpectrumReport spectrum = eigen_diagnostics(h);
  if (!(spectrum.max_real_part < 0.0)) {
    std::ostringstream os;
    os << "H(pi) is not Hurwitz (max real part " << spectrum.max_real_part << ")";
    throw Error(ErrorKind::kNumerical, os.str());
  }
  return h;
}

Eigen::VectorXd solve_checked(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              const char* what) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::kNumerical, std::string(what) + ": singular system");
  }
  return lu.solve(b);
}

}  // namespace

FluctuationVector stationary_kappa(const FixedPoint& fp, const ModelParams& params) {
  const DriftMatrix h = hurwitz_drift_matrix(fp, params);
  const FluctuationVector forcing = w3(fp.pi, params);
  if (params.beta() == 0.0) return FluctuationVector(params.capacity());
  return FluctuationVector::from_interior(
      solve_checked(h.matrix(), forcing.interior_vector(), "kappa"));
}

namespace {

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& h, const std::vector<double>& noise) {
  const Eigen::Index c = h.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(c, c);
  // Column-major vec: vec(H S) = (I kron H) vec S, vec(S H^T) = (H kron I) vec S.
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(c * c, c * c);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      system.block(i * c, j * c, c, c) = eye(i, j) * h + h(i, j) * eye;
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(c * c);
  for (Eigen::Index i = 0; i < c; ++i) {
    rhs(i * c + i) = -noise[static_cast<std::size_t>(i) + 1];
  }
  const Eigen::VectorXd vec = solve_checked(system, rhs, "Lyapunov equation");
  Eigen::MatrixXd sigma = Eigen::Map<const Eigen::MatrixXd>(vec.data(), c, c);
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace

Eigen::MatrixXd stationary_covariance(const FixedPoint& fp, const ModelParams& params) {
  const DriftMatrix h = hurwitz_drift_matrix(fp, params);
  return solve_lyapunov(h.matrix(), noise_intensities(fp.pi));
}

OUStationaryStats stationary_stats(const FixedPoint& fp, const ModelParams& params) {
  const DriftMatrix h = build_drift_matrix(fp.pi, params);
  OUStationaryStats stats{stationary_kappa(fp, params), {}, noise_intensities(fp.pi),
                          eigen_diagnostics(h)};
  stats.sigma = solve_lyapunov(h.matrix(), stats.noise);
  return stats;
}

double lyapunov_residual(const Eigen::MatrixXd& h, const Eigen::MatrixXd& sigma,
                         const std::vector<double>& noise) {
  Eigen::MatrixXd r = h * sigma + sigma * h.transpose();
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    r(i, i) += noise[static_cast<std::size_t>(i) + 1];
  }
  return r.cwiseAbs().maxCoeff();
}

namespace {

struct MomentState {
  std::vector<double> x;  // length C+1, x[0] = 1
  Eigen::VectorXd m;      // length C
  Eigen::MatrixXd s;      // C x C
};

struct MomentRate {
  std::vector<double> dx;
  Eigen::VectorXd dm;
  Eigen::MatrixXd ds;
};

MomentRate moment_rate(const MomentState& st, const ModelParams& params) {
  const std::size_t size = st.x.size();
  const int d = params.choices();
  MomentRate r;
  r.dx.resize(size);
  drift_unchecked(st.x, params, r.dx);
  const Eigen::MatrixXd h = drift_matrix_unchecked(st.x, params);

  Eigen::VectorXd forcing(static_cast<Eigen::Index>(size) - 1);
  Eigen::VectorXd source(static_cast<Eigen::Index>(size) - 1);
  double prev = detail::ipow(st.x[0], d);
  for (std::size_t n = 1; n < size; ++n) {
    const double cur = detail::ipow(st.x[n], d);
    const double next = n + 1 < size ? st.x[n + 1] : 0.0;
    const auto i = static_cast<Eigen::Index>(n) - 1;
    forcing(i) = params.beta() * (prev - cur);
    source(i) = params.sigma() * (prev - cur) + static_cast<double>(n) * (st.x[n] - next);
    prev = cur;
  }
  r.dm = h * st.m - forcing;
  r.ds = h * st.s + st.s * h.transpose();
  r.ds.diagonal() += source;
  return r;
}

MomentState advance(const MomentState& st, const MomentRate& r, double h) {
  MomentState out{st.x, st.m + h * r.dm, st.s + h * r.ds};
  for (std::size_t i = 1; i < out.x.size(); ++i) out.x[i] += h * r.dx[i];
  return out;
}

}  // namespace

OUMomentTrajectory transient_ou_moments(const OccupancyTail& u0,
                                        const FluctuationVector& m0,
                                        const Eigen::MatrixXd& s0,
                                        const ModelParams& params, double t_end,
                                        double dt) {
  const int c = params.capacity();
  if (u0.capacity() != c || m0.capacity() != c || s0.rows() != c || s0.cols() != c) {
    throw Error(ErrorKind::kInvalidState, "initial moments do not match C");
  }
  OUMomentTrajectory out;
  out.times = time_grid(t_end, dt);
  out.mean_field.reserve(out.times.size());
  out.mean.reserve(out.times.size());
  out.cov.reserve(out.times.size());

  MomentState st{{u0.values().begin(), u0.values().end()}, m0.interior_vector(), s0};
  out.mean_field.push_back(u0);
  out.mean.push_back(m0);
  out.cov.push_back(s0);

  for (std::size_t k = 1; k < out.times.size(); ++k) {
    const double h = out.times[k] - out.times[k - 1];
    const MomentRate k1 = moment_rate(st, params);
    const MomentRate k2 = moment_rate(advance(st, k1, 0.5 * h), params);
    const MomentRate k3 = moment_rate(advance(st, k2, 0.5 * h), params);
    const MomentRate k4 = moment_rate(advance(st, k3, h), params);
    for (std::size_t i = 1; i < st.x.size(); ++i) {
      st.x[i] += h / 6.0 * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]);
    }
    st.m += h / 6.0 * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
    st.s += h / 6.0 * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds);
    st.s = 0.5 * (st.s + st.s.transpose()).eval();
    try {
      out.mean_field.emplace_back(st.x);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "mean-field step left U at t=" << out.times[k] << " (" << e.what()
         << "); use a smaller dt";
      throw Error(ErrorKind::kIntegrationInstability, os.str());
    }
    const auto& clamped = out.mean_field.back().values();
    st.x.assign(clamped.begin(), clamped.end());
    out.mean.push_back(FluctuationVector::from_interior(st.m));
    out.cov.push_back(st.s);
  }
  return out;
}

}  // namespace jsqd
