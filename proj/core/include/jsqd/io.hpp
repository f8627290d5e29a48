#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jsqd/analytics.hpp"
#include "jsqd/diffusion.hpp"
#include "jsqd/meanfield.hpp"
#include "jsqd/model.hpp"
#include "jsqd/simulator.hpp"

namespace jsqd {

using json = nlohmann::ordered_json;

std::string_view to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(std::string_view name);

/// Writes `content` to `path` through a sibling temp file and a rename.
/// Throws kIo when the directory or file cannot be written.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Serialized with two-space indent and a trailing newline.
std::string dump(const json& j);

// Document schemas. Each *_to_json has a matching *_from_json that restores
// the value exactly (doubles are written in shortest round-trip form).

json model_params_to_json(const ModelParams& p);
ModelParams model_params_from_json(const json& j);

/// {pi: [...], lambda_hat: [...], residual, iterations}
json fixed_point_to_json(const FixedPoint& fp);
FixedPoint fixed_point_from_json(const json& j);

/// {kappa, sigma (rows), eigenvalues_real, eigenvalues_imag, V}
json stationary_stats_to_json(const OUStationaryStats& s);
OUStationaryStats stationary_stats_from_json(const json& j);

json sim_config_to_json(const SimConfig& c);
SimConfig sim_config_from_json(const json& j);

/// {blocking_estimate, ci_halfwidth, arrivals, blocked, replication_estimates,
///  config_echo, seed}
json sim_outcome_to_json(const SimOutcome& o, const SimConfig& config);
SimOutcome sim_outcome_from_json(const json& j);

/// {N, pi_C_d, first_order, kappa_term, beta_term[, simulated, simulated_ci_halfwidth]}
json blocking_report_to_json(const BlockingReport& r);
BlockingReport blocking_report_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

/// CSV with header t,X1,...,XC (or the given column prefix).
void write_tail_csv(std::ostream& os, const Trajectory& t, const std::string& prefix = "X");
/// CSV with header t,Z1,...,ZC; rows grouped by replication, then time.
void write_fluctuation_csv(std::ostream& os, const std::vector<FluctuationSample>& samples);

}  // namespace jsqd
