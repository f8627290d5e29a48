#include "jsqd/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "format.hpp"

namespace jsqd {

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::kWithReplacement ? "with-replacement" : "without-replacement";
}

SamplingMode sampling_mode_from_string(std::string_view name) {
  if (name == "with-replacement") return SamplingMode::kWithReplacement;
  if (name == "without-replacement") return SamplingMode::kWithoutReplacement;
  throw Error(ErrorKind::kConfiguration, "unknown sampling mode '" + std::string(name) + "'");
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorKind::kIo, "cannot open '" + tmp.string() + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw Error(ErrorKind::kIo, "failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot move output into place at '" + path.string() + "'");
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

namespace {

// Missing or mistyped fields surface as kConfiguration rather than
// nlohmann exceptions.
template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::kConfiguration, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfiguration,
                std::string("field '") + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace

json model_params_to_json(const ModelParams& p) {
  return json{{"N", p.servers()},      {"C", p.capacity()}, {"d", p.choices()},
              {"sigma", p.sigma()},    {"beta", p.beta()},
              {"arrival_rate", p.arrival_rate()}};
}

ModelParams model_params_from_json(const json& j) {
  return ModelParams(field<std::int64_t>(j, "N"), field<int>(j, "C"), field<int>(j, "d"),
                     field<double>(j, "sigma"), field<double>(j, "beta"));
}

json fixed_point_to_json(const FixedPoint& fp) {
  return json{{"pi", std::vector<double>(fp.pi.values().begin(), fp.pi.values().end())},
              {"lambda_hat", fp.lambda_hat},
              {"residual", fp.residual},
              {"iterations", fp.iterations}};
}

FixedPoint fixed_point_from_json(const json& j) {
  return FixedPoint{OccupancyTail(field<std::vector<double>>(j, "pi")),
                    field<std::vector<double>>(j, "lambda_hat"), field<double>(j, "residual"),
                    field<int>(j, "iterations")};
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::kConfiguration, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorKind::kConfiguration, "matrix rows have unequal length");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

json stationary_stats_to_json(const OUStationaryStats& s) {
  std::vector<double> re, im;
  for (const auto& z : s.spectrum.eigenvalues) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  return json{{"kappa", std::vector<double>(s.kappa.values().begin(), s.kappa.values().end())},
              {"sigma", matrix_to_json(s.sigma)},
              {"eigenvalues_real", re},
              {"eigenvalues_imag", im},
              {"V", s.noise}};
}

OUStationaryStats stationary_stats_from_json(const json& j) {
  const auto re = field<std::vector<double>>(j, "eigenvalues_real");
  const auto im = field<std::vector<double>>(j, "eigenvalues_imag");
  if (re.size() != im.size() || re.empty()) {
    throw Error(ErrorKind::kConfiguration, "eigenvalue arrays are empty or mismatched");
  }
  SpectrumReport spectrum;
  for (std::size_t i = 0; i < re.size(); ++i) spectrum.eigenvalues.emplace_back(re[i], im[i]);
  spectrum.max_real_part = re.front();
  for (double x : re) spectrum.max_real_part = std::max(spectrum.max_real_part, x);
  if (!j.contains("sigma")) throw Error(ErrorKind::kConfiguration, "missing field 'sigma'");
  return OUStationaryStats{FluctuationVector(field<std::vector<double>>(j, "kappa")),
                           matrix_from_json(j.at("sigma")), field<std::vector<double>>(j, "V"),
                           std::move(spectrum)};
}

json sim_config_to_json(const SimConfig& c) {
  json j{{"model", model_params_to_json(c.params)},
         {"seed", c.seed},
         {"warmup", c.warmup},
         {"horizon", c.horizon},
         {"replications", c.replications},
         {"sample_dt", c.sample_dt},
         {"sampling", std::string(to_string(c.sampling))},
         {"record_trajectory", c.record_trajectory}};
  if (c.initial) {
    j["initial_counts"] = std::vector<std::int64_t>(c.initial->counts().begin(),
                                                    c.initial->counts().end());
  } else {
    j["initial_counts"] = "fixed-point-rounded";
  }
  return j;
}

SimConfig sim_config_from_json(const json& j) {
  if (!j.contains("model")) throw Error(ErrorKind::kConfiguration, "missing field 'model'");
  SimConfig c(model_params_from_json(j.at("model")));
  c.seed = field<std::uint64_t>(j, "seed");
  c.warmup = field<double>(j, "warmup");
  c.horizon = field<double>(j, "horizon");
  c.replications = field<int>(j, "replications");
  c.sample_dt = field<double>(j, "sample_dt");
  c.sampling = sampling_mode_from_string(field<std::string>(j, "sampling"));
  c.record_trajectory = field<bool>(j, "record_trajectory");
  if (j.contains("initial_counts") && j.at("initial_counts").is_array()) {
    c.initial = AggregateState(field<std::vector<std::int64_t>>(j, "initial_counts"));
  }
  return c;
}

json sim_outcome_to_json(const SimOutcome& o, const SimConfig& config) {
  return json{{"blocking_estimate", o.blocking_estimate},
              {"ci_halfwidth", o.ci_halfwidth},
              {"arrivals", o.arrivals},
              {"blocked", o.blocked},
              {"replication_estimates", o.replication_estimates},
              {"config_echo", sim_config_to_json(config)},
              {"seed", o.seed}};
}

SimOutcome sim_outcome_from_json(const json& j) {
  SimOutcome o;
  o.blocking_estimate = field<double>(j, "blocking_estimate");
  o.ci_halfwidth = field<double>(j, "ci_halfwidth");
  o.arrivals = field<std::int64_t>(j, "arrivals");
  o.blocked = field<std::int64_t>(j, "blocked");
  o.replication_estimates = field<std::vector<double>>(j, "replication_estimates");
  o.seed = field<std::uint64_t>(j, "seed");
  return o;
}

json blocking_report_to_json(const BlockingReport& r) {
  json j{{"N", r.servers},
         {"pi_C_d", r.pi_c_d},
         {"first_order", r.first_order},
         {"kappa_term", r.kappa_term},
         {"beta_term", r.beta_term}};
  if (r.simulated) j["simulated"] = *r.simulated;
  if (r.simulated_ci_halfwidth) j["simulated_ci_halfwidth"] = *r.simulated_ci_halfwidth;
  return j;
}

BlockingReport blocking_report_from_json(const json& j) {
  BlockingReport r;
  r.servers = field<std::int64_t>(j, "N");
  r.pi_c_d = field<double>(j, "pi_C_d");
  r.first_order = field<double>(j, "first_order");
  r.kappa_term = field<double>(j, "kappa_term");
  r.beta_term = field<double>(j, "beta_term");
  if (j.contains("simulated")) r.simulated = field<double>(j, "simulated");
  if (j.contains("simulated_ci_halfwidth")) {
    r.simulated_ci_halfwidth = field<double>(j, "simulated_ci_halfwidth");
  }
  return r;
}

void write_tail_csv(std::ostream& os, const Trajectory& t, const std::string& prefix) {
  const int c = t.states.empty() ? 0 : t.states.front().capacity();
  os << "t";
  for (int n = 1; n <= c; ++n) os << ',' << prefix << n;
  os << '\n';
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    os << detail::format_double(t.times[k]);
    for (int n = 1; n <= c; ++n) os << ',' << detail::format_double(t.states[k][static_cast<std::size_t>(n)]);
    os << '\n';
  }
}

void write_fluctuation_csv(std::ostream& os, const std::vector<FluctuationSample>& samples) {
  const int c = samples.empty() ? 0 : samples.front().z.capacity();
  os << "t";
  for (int n = 1; n <= c; ++n) os << ",Z" << n;
  os << '\n';
  for (const auto& s : samples) {
    os << detail::format_double(s.time);
    for (int n = 1; n <= c; ++n) os << ',' << detail::format_double(s.z[static_cast<std::size_t>(n)]);
    os << '\n';
  }
}

}  // namespace jsqd
