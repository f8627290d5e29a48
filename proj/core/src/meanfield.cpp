#include "jsqd/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "jsqd/io.hpp"
#include "power.hpp"

namespace jsqd {

double default_time_step(const ModelParams& params) {
  return 1e-3 * std::min({1.0, 1.0 / params.sigma(),
                          1.0 / static_cast<double>(params.capacity())});
}

std::vector<double> time_grid(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0) || !std::isfinite(t_end)) {
    throw Error(ErrorKind::kInvalidParameters, "time grid needs dt > 0, t_end >= 0");
  }
  // Tolerate t_end being a multiple of dt up to rounding.
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  std::vector<double> times(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    times[k] = static_cast<double>(k) * dt;
  }
  times.back() = t_end;
  return times;
}

namespace {

std::vector<double> rk4_tail_step(const std::vector<double>& x, double h,
                                  const ModelParams& params) {
  const std::size_t n = x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  drift_unchecked(x, params, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  drift_unchecked(tmp, params, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  drift_unchecked(tmp, params, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  drift_unchecked(tmp, params, k4);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  out[0] = 1.0;
  return out;
}

}  // namespace

Trajectory integrate_mean_field(const OccupancyTail& u0, const ModelParams& params,
                                double t_end, double dt) {
  if (u0.capacity() != params.capacity()) {
    throw Error(ErrorKind::kInvalidState, "initial tail length does not match C");
  }
  Trajectory out;
  out.times = time_grid(t_end, dt);
  out.states.reserve(out.times.size());
  out.states.push_back(u0);
  std::vector<double> x(u0.values().begin(), u0.values().end());
  for (std::size_t k = 1; k < out.times.size(); ++k) {
    const double h = out.times[k] - out.times[k - 1];
    x = rk4_tail_step(x, h, params);
    try {
      out.states.emplace_back(x);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "mean-field step left U at t=" << out.times[k] << " (" << e.what()
         << "); use a smaller dt";
      throw Error(ErrorKind::kIntegrationInstability, os.str());
    }
    // Continue from the clamped state.
    const auto& s = out.states.back().values();
    x.assign(s.begin(), s.end());
  }
  return out;
}

std::vector<double> theta_map(std::span<const double> p, const ModelParams& params) {
  const std::size_t size = p.size();
  const int d = params.choices();
  const double sigma = params.sigma();
  std::vector<double> tail(size + 1, 0.0);
  for (std::size_t n = size; n-- > 0;) tail[n] = tail[n + 1] + p[n];
  std::vector<double> r(size);
  for (std::size_t n = 0; n < size; ++n) {
    const double hi = tail[n];
    const double lo = tail[n + 1];
    if (d == 1) {
      r[n] = sigma;
    } else if (hi > lo) {
      r[n] = sigma * (detail::ipow(hi, d) - detail::ipow(lo, d)) / (hi - lo);
    } else {
      r[n] = sigma * d * detail::ipow(lo, d - 1);
    }
  }
  return r;
}

std::vector<double> xi_hat_map(std::span<const double> rates) {
  std::vector<double> a(rates.size());
  a[0] = 1.0;
  for (std::size_t n = 1; n < a.size(); ++n) {
    a[n] = a[n - 1] * rates[n - 1] / static_cast<double>(n);
  }
  double total = 0.0;
  for (double x : a) total += x;
  for (double& x : a) x /= total;
  return a;
}

double fixed_point_residual(const OccupancyTail& pi, const ModelParams& params) {
  std::vector<double> h(pi.size());
  drift_unchecked(pi.values(), params, h);
  double worst = 0.0;
  for (double x : h) worst = std::max(worst, std::abs(x));
  return worst;
}

namespace {

std::vector<double> lambda_hat_of(const OccupancyTail& pi, const ModelParams& params) {
  const auto p = pi.distribution();
  auto r = theta_map(p, params);
  r.pop_back();
  return r;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

FixedPoint fixed_point(const ModelParams& params, const FixedPointOptions& options) {
  if (!(options.tol > 0.0)) {
    throw Error(ErrorKind::kInvalidParameters, "fixed_point tolerance must be positive");
  }
  const std::size_t size = static_cast<std::size_t>(params.capacity()) + 1;
  std::vector<double> p;
  if (options.start) {
    p = *options.start;
    if (p.size() != size) {
      throw Error(ErrorKind::kInvalidParameters, "start distribution has wrong length");
    }
  } else {
    p.assign(size, 1.0 / static_cast<double>(size));
  }

  constexpr int kOscillationWindow = 50;
  bool damped = false;
  double best_step = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double last_residual = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    auto next = xi_hat_map(theta_map(p, params));
    if (damped) {
      for (std::size_t i = 0; i < size; ++i) next[i] = 0.5 * (next[i] + p[i]);
    }
    const double step = max_abs_diff(next, p);
    p = std::move(next);

    if (step < best_step) {
      best_step = step;
      since_best = 0;
    } else if (++since_best >= kOscillationWindow && !damped) {
      damped = true;
      since_best = 0;
    }

    if (step < options.tol) {
      OccupancyTail pi = OccupancyTail::from_distribution(p);
      last_residual = fixed_point_residual(pi, params);
      if (last_residual <= 10.0 * options.tol) {
        FixedPoint fp{std::move(pi), {}, last_residual, iter};
        fp.lambda_hat = lambda_hat_of(fp.pi, params);
        return fp;
      }
    }
  }
  if (!std::isfinite(last_residual)) {
    last_residual = fixed_point_residual(OccupancyTail::from_distribution(p), params);
  }
  std::ostringstream os;
  os << "fixed-point iteration did not converge in " << options.max_iter
     << " iterations (last residual " << last_residual << ")";
  throw Error(ErrorKind::kNonConvergence, os.str());
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  write_tail_csv(os, trajectory, "u");
}

}  // namespace jsqd
