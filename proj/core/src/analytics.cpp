#include "jsqd/analytics.hpp"

#include <cmath>
#include <numbers>

#include "format.hpp"
#include "jsqd/diffusion.hpp"
#include "power.hpp"

namespace jsqd {

double erlang_b(double alpha, std::int64_t n) {
  if (!(alpha > 0.0) || n < 1) {
    throw Error(ErrorKind::kInvalidParameters, "erlang_b needs alpha > 0 and n >= 1");
  }
  double b = 1.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    b = alpha * b / (static_cast<double>(k) + alpha * b);
  }
  return b;
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double halfin_whitt_limit(double beta, int capacity) {
  if (capacity < 1) {
    throw Error(ErrorKind::kInvalidParameters, "capacity must be >= 1");
  }
  return normal_pdf(beta) / (std::sqrt(static_cast<double>(capacity)) * normal_cdf(beta));
}

double weighted_kappa_sum(const FluctuationVector& kappa) {
  double s = 0.0;
  const std::size_t size = kappa.size();
  for (std::size_t i = 0; i < size; ++i) {
    const double next = i + 1 < size ? kappa[i + 1] : 0.0;
    s += static_cast<double>(i) * (kappa[i] - next);
  }
  return s;
}

BlockingReport blocking_approximation(const FixedPoint& fp, const FluctuationVector& kappa,
                                      const ModelParams& params) {
  if (kappa.capacity() != params.capacity() || fp.pi.capacity() != params.capacity()) {
    throw Error(ErrorKind::kInvalidState, "fixed point, kappa and params disagree on C");
  }
  BlockingReport r;
  r.servers = params.servers();
  const double scale = params.sigma() * std::sqrt(static_cast<double>(params.servers()));
  r.pi_c_d = detail::ipow(fp.pi[static_cast<std::size_t>(params.capacity())], params.choices());
  r.kappa_term = weighted_kappa_sum(kappa) / scale;
  r.beta_term = params.beta() / scale * (1.0 - r.pi_c_d);
  r.first_order = r.pi_c_d - r.kappa_term - r.beta_term;
  return r;
}

double scaling_constant(const FixedPoint& fp, const FluctuationVector& kappa,
                        const ModelParams& params) {
  const double pcd =
      detail::ipow(fp.pi[static_cast<std::size_t>(params.capacity())], params.choices());
  double sum = 0.0;
  for (std::size_t i = 1; i < kappa.size(); ++i) sum += kappa[i];
  return -sum / params.sigma() - params.beta() * (1.0 - pcd) / params.sigma();
}

std::vector<ScalingRow> error_scaling_experiment(const ModelParams& params_template,
                                                 const std::vector<std::int64_t>& servers,
                                                 const SimConfig& sim_template) {
  for (std::size_t i = 1; i < servers.size(); ++i) {
    if (servers[i] <= servers[i - 1]) {
      throw Error(ErrorKind::kConfiguration, "N list must be strictly increasing");
    }
  }
  const FixedPoint fp = fixed_point(params_template);
  const FluctuationVector kappa = stationary_kappa(fp, params_template);
  const double constant = scaling_constant(fp, kappa, params_template);

  std::vector<ScalingRow> rows;
  rows.reserve(servers.size());
  for (std::int64_t n : servers) {
    const ModelParams params = params_template.with_servers(n);
    SimConfig config = sim_template;
    config.params = params;
    config.initial.reset();
    config.record_trajectory = false;
    const SimOutcome sim = estimate_blocking(config);
    const BlockingReport report = blocking_approximation(fp, kappa, params);
    const double root_n = std::sqrt(static_cast<double>(n));

    ScalingRow row;
    row.servers = n;
    row.simulated = sim.blocking_estimate;
    row.ci_halfwidth = sim.ci_halfwidth;
    row.pi_c_d = report.pi_c_d;
    row.first_order = report.first_order;
    row.scaled_error_mean_field = root_n * (sim.blocking_estimate - report.pi_c_d);
    row.theoretical_constant = constant;
    row.scaled_error_first_order = root_n * (sim.blocking_estimate - report.first_order);
    rows.push_back(row);
  }
  return rows;
}

FluctuationSummary summarize_fluctuations(std::span<const FluctuationSample> samples,
                                          std::size_t batches) {
  if (samples.size() < 2) {
    throw Error(ErrorKind::kInvalidParameters, "need at least two fluctuation samples");
  }
  const auto c = static_cast<Eigen::Index>(samples.front().z.capacity());
  FluctuationSummary out;
  out.count = samples.size();
  out.mean = Eigen::VectorXd::Zero(c);
  for (const auto& s : samples) out.mean += s.z.interior_vector();
  out.mean /= static_cast<double>(samples.size());
  out.cov = Eigen::MatrixXd::Zero(c, c);
  for (const auto& s : samples) {
    const Eigen::VectorXd dev = s.z.interior_vector() - out.mean;
    out.cov += dev * dev.transpose();
  }
  out.cov /= static_cast<double>(samples.size() - 1);

  if (batches == 0) {
    out.standard_error =
        (out.cov.diagonal() / static_cast<double>(samples.size())).cwiseSqrt();
    return out;
  }
  const std::size_t per_batch = samples.size() / batches;
  if (batches < 2 || per_batch < 1) {
    throw Error(ErrorKind::kInvalidParameters, "need at least two non-empty batches");
  }
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(c, static_cast<Eigen::Index>(batches));
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t k = b * per_batch; k < (b + 1) * per_batch; ++k) {
      means.col(static_cast<Eigen::Index>(b)) += samples[k].z.interior_vector();
    }
  }
  means /= static_cast<double>(per_batch);
  const Eigen::VectorXd grand = means.rowwise().mean();
  const Eigen::VectorXd var =
      (means.colwise() - grand).array().square().rowwise().sum() / static_cast<double>(batches - 1);
  out.standard_error = (var / static_cast<double>(batches)).cwiseSqrt();
  return out;
}

void write_scaling_csv(std::ostream& os, const std::vector<ScalingRow>& rows) {
  using detail::format_double;
  os << "N,simulated,pi_C_d,first_order,sqrtN_err_mean_field,theoretical_constant,"
        "sqrtN_err_first_order,ci_halfwidth\n";
  for (const auto& r : rows) {
    os << r.servers << ',' << format_double(r.simulated) << ','
       << format_double(r.pi_c_d) << ',' << format_double(r.first_order) << ','
       << format_double(r.scaled_error_mean_field) << ','
       << format_double(r.theoretical_constant) << ','
       << format_double(r.scaled_error_first_order) << ','
       << format_double(r.ci_halfwidth) << '\n';
  }
}

}  // namespace jsqd
