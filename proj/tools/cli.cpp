#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jsqd/analytics.hpp"
#include "jsqd/diffusion.hpp"
#include "jsqd/io.hpp"
#include "jsqd/meanfield.hpp"
#include "jsqd/simulator.hpp"

#ifndef JSQD_VERSION
#define JSQD_VERSION "0.0.0"
#endif

namespace jsqd::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

json default_config() {
  return json{
      {"model", {{"N", 100}, {"C", 2}, {"d", 2}, {"sigma", 2.0}, {"beta", 0.0}}},
      {"fixed_point", {{"tol", 1e-12}, {"max_iter", 100000}}},
      {"mean_field", {{"t_end", 10.0}, {"dt", nullptr}, {"initial", "empty"}}},
      {"simulation",
       {{"seed", 1},
        {"warmup", nullptr},
        {"horizon", 1000.0},
        {"replications", 10},
        {"sample_dt", 1.0},
        {"sampling", "with-replacement"},
        {"initial", "fixed-point-rounded"},
        {"record_trajectory", false},
        {"threads", 0}}},
      {"fluctuations",
       {{"mode", "stationary"}, {"spacing", 1.0}, {"batches", 20}, {"t_end", 1.0},
        {"dt", nullptr}, {"initial", "empty"}}},
      {"blocking", {{"simulate", false}}},
      {"scaling", {{"N_list", {100, 400, 1600}}}},
      {"output_dir", "jsqd-out"},
  };
}

namespace {

struct CliError {
  ExitCode code;
  std::string kind;
  std::string message;
};

[[noreturn]] void config_error(const std::string& msg) {
  throw CliError{kInvalidConfig, "configuration", msg};
}

// Overlays `patch` onto `base`, rejecting keys the defaults do not know.
void merge_strict(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) config_error("config section '" + path + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) config_error("unknown config key '" + where + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_strict(slot, value, where);
    } else {
      slot = value;
    }
  }
}

template <class T>
T get(const json& cfg, const std::string& section, const std::string& key) {
  try {
    return cfg.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    config_error("config value '" + section + "." + key + "' is missing or has the wrong type");
  }
}

struct Overrides {
  std::string config_path;
  std::string output_dir;
  std::int64_t servers = 0;
  int capacity = 0, choices = 0, replications = 0, max_iter = 0;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  double sigma = 0, beta = 0, horizon = 0, warmup = 0, sample_dt = 0, t_end = 0, dt = 0,
         tol = 0, spacing = 0;
  std::string mode, sampling, initial;
  std::vector<std::int64_t> n_list;
  bool simulate = false;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_error("cannot parse '" + item + "' as a number");
    }
  }
  return out;
}

json resolve_config(const CLI::App& app, const Overrides& o) {
  json cfg = default_config();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) config_error("cannot read config file '" + o.config_path + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      config_error("config file '" + o.config_path + "' is not valid JSON: " + e.what());
    }
    merge_strict(cfg, file, "");
  }
  if (const char* env = std::getenv("JSQD_OUTPUT_DIR"); env && *env) cfg["output_dir"] = env;
  if (const char* env = std::getenv("JSQD_THREADS"); env && *env) {
    try {
      cfg["simulation"]["threads"] = std::stoul(env);
    } catch (const std::exception&) {
      config_error("JSQD_THREADS must be a non-negative integer");
    }
  }

  auto set = [&](const char* flag, auto apply) {
    if (app.count(flag) > 0) apply();
  };
  set("--output-dir", [&] { cfg["output_dir"] = o.output_dir; });
  set("--servers", [&] { cfg["model"]["N"] = o.servers; });
  set("--capacity", [&] { cfg["model"]["C"] = o.capacity; });
  set("--choices", [&] { cfg["model"]["d"] = o.choices; });
  set("--sigma", [&] { cfg["model"]["sigma"] = o.sigma; });
  set("--beta", [&] { cfg["model"]["beta"] = o.beta; });
  set("--tol", [&] { cfg["fixed_point"]["tol"] = o.tol; });
  set("--max-iter", [&] { cfg["fixed_point"]["max_iter"] = o.max_iter; });
  set("--seed", [&] { cfg["simulation"]["seed"] = o.seed; });
  set("--threads", [&] { cfg["simulation"]["threads"] = o.threads; });
  set("--replications", [&] { cfg["simulation"]["replications"] = o.replications; });
  set("--horizon", [&] { cfg["simulation"]["horizon"] = o.horizon; });
  set("--warmup", [&] { cfg["simulation"]["warmup"] = o.warmup; });
  set("--sample-dt", [&] { cfg["simulation"]["sample_dt"] = o.sample_dt; });
  set("--sampling", [&] { cfg["simulation"]["sampling"] = o.sampling; });
  set("--record-trajectory", [&] { cfg["simulation"]["record_trajectory"] = true; });
  set("--t-end", [&] {
    cfg["mean_field"]["t_end"] = o.t_end;
    cfg["fluctuations"]["t_end"] = o.t_end;
  });
  set("--dt", [&] {
    cfg["mean_field"]["dt"] = o.dt;
    cfg["fluctuations"]["dt"] = o.dt;
  });
  set("--initial", [&] {
    json init = o.initial;
    if (!o.initial.empty() && (std::isdigit(static_cast<unsigned char>(o.initial[0])) || o.initial[0] == '.')) {
      init = parse_list(o.initial);
    }
    cfg["mean_field"]["initial"] = init;
    cfg["fluctuations"]["initial"] = init;
  });
  set("--mode", [&] { cfg["fluctuations"]["mode"] = o.mode; });
  set("--spacing", [&] { cfg["fluctuations"]["spacing"] = o.spacing; });
  set("--N-list", [&] { cfg["scaling"]["N_list"] = o.n_list; });
  set("--simulate", [&] { cfg["blocking"]["simulate"] = true; });

  // Fill computed defaults so the manifest records what actually ran.
  const ModelParams params = model_params_from_json(cfg["model"]);
  if (cfg["mean_field"]["dt"].is_null()) cfg["mean_field"]["dt"] = default_time_step(params);
  if (cfg["fluctuations"]["dt"].is_null()) cfg["fluctuations"]["dt"] = default_time_step(params);
  if (cfg["simulation"]["warmup"].is_null()) cfg["simulation"]["warmup"] = default_warmup(params);
  return cfg;
}

ModelParams model_of(const json& cfg) { return model_params_from_json(cfg.at("model")); }

FixedPointOptions fixed_point_options(const json& cfg) {
  FixedPointOptions opt;
  opt.tol = get<double>(cfg, "fixed_point", "tol");
  opt.max_iter = get<int>(cfg, "fixed_point", "max_iter");
  return opt;
}

OccupancyTail initial_tail(const json& value, const ModelParams& params, const json& cfg) {
  if (value.is_string()) {
    const auto name = value.get<std::string>();
    if (name == "empty") return OccupancyTail::empty(params.capacity());
    if (name == "full") return OccupancyTail::full(params.capacity());
    if (name == "fixed-point") return fixed_point(params, fixed_point_options(cfg)).pi;
    config_error("unknown initial tail '" + name + "' (empty, full, fixed-point or [u1..uC])");
  }
  if (!value.is_array()) config_error("initial tail must be a name or an array");
  std::vector<double> u{1.0};
  for (const auto& x : value) u.push_back(x.get<double>());
  if (static_cast<int>(u.size()) != params.capacity() + 1) {
    config_error("initial tail must list u1..uC (C values)");
  }
  return OccupancyTail(std::move(u));
}

SimConfig sim_config_of(const json& cfg) {
  SimConfig c(model_of(cfg));
  c.seed = get<std::uint64_t>(cfg, "simulation", "seed");
  c.warmup = get<double>(cfg, "simulation", "warmup");
  c.horizon = get<double>(cfg, "simulation", "horizon");
  c.replications = get<int>(cfg, "simulation", "replications");
  c.sample_dt = get<double>(cfg, "simulation", "sample_dt");
  c.sampling = sampling_mode_from_string(get<std::string>(cfg, "simulation", "sampling"));
  c.record_trajectory = get<bool>(cfg, "simulation", "record_trajectory");
  c.threads = get<unsigned>(cfg, "simulation", "threads");
  const json& init = cfg.at("simulation").at("initial");
  if (init.is_array()) {
    c.initial = AggregateState(init.get<std::vector<std::int64_t>>());
  } else if (!init.is_string() || init.get<std::string>() != "fixed-point-rounded") {
    config_error("simulation.initial must be \"fixed-point-rounded\" or a counts array");
  }
  validate(c);
  return c;
}

std::string to_text(auto&& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw Error(ErrorKind::kIo, "cannot create output directory '" + dir_.string() + "'");
    }
  }

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(dir_ / name, content);
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json summary_json(const FluctuationSummary& s) {
  return json{{"count", s.count},
              {"empirical_mean", vector_json(s.mean)},
              {"empirical_cov", matrix_to_json(s.cov)},
              {"standard_error", vector_json(s.standard_error)}};
}

void run_fixed_point(const json& cfg, OutputDir& out) {
  const FixedPoint fp = fixed_point(model_of(cfg), fixed_point_options(cfg));
  out.write("fixed_point.json", dump(fixed_point_to_json(fp)));
}

void run_mean_field(const json& cfg, OutputDir& out) {
  const ModelParams params = model_of(cfg);
  const OccupancyTail u0 = initial_tail(cfg.at("mean_field").at("initial"), params, cfg);
  const Trajectory traj = integrate_mean_field(u0, params, get<double>(cfg, "mean_field", "t_end"),
                                               get<double>(cfg, "mean_field", "dt"));
  out.write("mean_field.csv", to_text([&](std::ostream& os) { write_trajectory_csv(os, traj); }));
}

void run_diffusion(const json& cfg, OutputDir& out) {
  const ModelParams params = model_of(cfg);
  const FixedPoint fp = fixed_point(params, fixed_point_options(cfg));
  out.write("diffusion.json", dump(stationary_stats_to_json(stationary_stats(fp, params))));
}

void run_simulate(const json& cfg, OutputDir& out) {
  const SimConfig config = sim_config_of(cfg);
  const SimOutcome outcome = estimate_blocking(config);
  out.write("outcome.json", dump(sim_outcome_to_json(outcome, config)));
  if (outcome.trajectory) {
    out.write("trajectory.csv",
              to_text([&](std::ostream& os) { write_tail_csv(os, *outcome.trajectory, "X"); }));
  }
}

void run_fluctuations(const json& cfg, OutputDir& out) {
  const std::string mode = get<std::string>(cfg, "fluctuations", "mode");
  // Transient runs cover [0, fluctuations.t_end]; warmup and horizon do not apply.
  json effective = cfg;
  if (mode == "transient") {
    effective["simulation"]["warmup"] = 0.0;
    effective["simulation"]["horizon"] = std::max(get<double>(cfg, "fluctuations", "t_end"),
                                                  get<double>(cfg, "simulation", "sample_dt"));
  }
  const SimConfig config = sim_config_of(effective);
  const ModelParams& params = config.params;
  json summary{{"mode", mode}};

  if (mode == "stationary") {
    const auto samples =
        fluctuation_samples(config, StationaryMode{get<double>(cfg, "fluctuations", "spacing")});
    const auto batches = get<std::size_t>(cfg, "fluctuations", "batches");
    const FixedPoint fp = fixed_point(params, fixed_point_options(cfg));
    const OUStationaryStats stats = stationary_stats(fp, params);
    summary["batches"] = batches;
    summary["empirical"] = summary_json(summarize_fluctuations(samples, batches));
    summary["theory"] = {{"kappa", vector_json(stats.kappa.interior_vector())},
                         {"sigma", matrix_to_json(stats.sigma)}};
    out.write("fluctuations.csv", to_text([&](std::ostream& os) { write_fluctuation_csv(os, samples); }));
  } else if (mode == "transient") {
    const double t_end = get<double>(cfg, "fluctuations", "t_end");
    const double dt = get<double>(cfg, "fluctuations", "dt");
    const double ratio = config.sample_dt / dt;
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
      config_error("simulation.sample_dt must be an integer multiple of fluctuations.dt");
    }
    const OccupancyTail u0 = initial_tail(cfg.at("fluctuations").at("initial"), params, cfg);
    const AggregateState start = AggregateState::rounded(u0, params.servers());
    // Theory starts from the same rounding offset the simulation sees.
    FluctuationVector m0(params.capacity());
    const double root_n = std::sqrt(static_cast<double>(params.servers()));
    for (int n = 1; n <= params.capacity(); ++n) {
      m0.interior(static_cast<std::size_t>(n)) = root_n * (start.tail_at(n) - u0[static_cast<std::size_t>(n)]);
    }
    const Eigen::MatrixXd s0 = Eigen::MatrixXd::Zero(params.capacity(), params.capacity());
    const OUMomentTrajectory moments = transient_ou_moments(u0, m0, s0, params, t_end, dt);

    Trajectory mean_field;
    std::vector<std::size_t> picked;
    for (std::size_t k = 0; k < moments.times.size(); k += stride) {
      mean_field.times.push_back(moments.times[k]);
      mean_field.states.push_back(moments.mean_field[k]);
      picked.push_back(k);
    }
    const auto samples = fluctuation_samples(config, TransientMode{mean_field});

    json per_time = json::array();
    for (std::size_t g = 0; g < picked.size(); ++g) {
      std::vector<FluctuationSample> at_t;
      for (const auto& s : samples) {
        if (s.time == mean_field.times[g]) at_t.push_back(s);
      }
      json row{{"t", mean_field.times[g]},
               {"theory_mean", vector_json(moments.mean[picked[g]].interior_vector())},
               {"theory_cov", matrix_to_json(moments.cov[picked[g]])}};
      if (at_t.size() >= 2) row["empirical"] = summary_json(summarize_fluctuations(at_t));
      per_time.push_back(std::move(row));
    }
    summary["times"] = std::move(per_time);
    out.write("fluctuations.csv", to_text([&](std::ostream& os) { write_fluctuation_csv(os, samples); }));
  } else {
    config_error("fluctuations.mode must be \"stationary\" or \"transient\"");
  }
  out.write("fluctuation_summary.json", dump(summary));
}

void run_blocking(const json& cfg, OutputDir& out) {
  const ModelParams params = model_of(cfg);
  const FixedPoint fp = fixed_point(params, fixed_point_options(cfg));
  const FluctuationVector kappa = stationary_kappa(fp, params);
  BlockingReport report = blocking_approximation(fp, kappa, params);
  if (get<bool>(cfg, "blocking", "simulate")) {
    const SimOutcome sim = estimate_blocking(sim_config_of(cfg));
    report.simulated = sim.blocking_estimate;
    report.simulated_ci_halfwidth = sim.ci_halfwidth;
  }
  out.write("blocking.json", dump(blocking_report_to_json(report)));
}

void run_scaling(const json& cfg, OutputDir& out) {
  const SimConfig config = sim_config_of(cfg);
  const auto n_list = get<std::vector<std::int64_t>>(cfg, "scaling", "N_list");
  if (n_list.empty()) config_error("scaling.N_list must not be empty");
  const auto rows = error_scaling_experiment(config.params, n_list, config);
  out.write("scaling.csv", to_text([&](std::ostream& os) { write_scaling_csv(os, rows); }));
}

ExitCode exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameters:
    case ErrorKind::kInvalidState:
    case ErrorKind::kConfiguration:
      return kInvalidConfig;
    case ErrorKind::kIo:
      return kUnwritableOutput;
    default:
      return kComputation;
  }
}

int report(std::ostream& err, const CliError& e) {
  json j{{"error", {{"kind", e.kind}, {"message", e.message}, {"exit_code", static_cast<int>(e.code)}}}};
  err << j.dump() << '\n';
  return e.code;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"JSQ(d) Erlang loss systems: mean-field, diffusion and simulation", "jsqd"};
  app.require_subcommand(1);
  Overrides o;

  app.add_option("--config", o.config_path, "JSON config file");
  app.add_option("-o,--output-dir", o.output_dir, "Output directory");
  app.add_option("-N,--servers", o.servers, "Number of servers N");
  app.add_option("-C,--capacity", o.capacity, "Per-server capacity C");
  app.add_option("-d,--choices", o.choices, "Servers sampled per arrival d");
  app.add_option("--sigma", o.sigma, "Nominal per-server arrival rate");
  app.add_option("--beta", o.beta, "Perturbation coefficient");
  app.add_option("--tol", o.tol, "Fixed-point tolerance");
  app.add_option("--max-iter", o.max_iter, "Fixed-point iteration limit");
  app.add_option("--seed", o.seed, "Master RNG seed");
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  app.add_option("--replications", o.replications, "Independent replications");
  app.add_option("--horizon", o.horizon, "Simulated time per replication");
  app.add_option("--warmup", o.warmup, "Warmup time excluded from estimates");
  app.add_option("--sample-dt", o.sample_dt, "Sampling interval for trajectories");
  app.add_option("--sampling", o.sampling, "with-replacement | without-replacement");
  app.add_flag("--record-trajectory", "Emit the sampled tail trajectory");
  app.add_option("--t-end", o.t_end, "Integration horizon");
  app.add_option("--dt", o.dt, "RK4 step");
  app.add_option("--initial", o.initial, "empty | full | fixed-point | u1,...,uC");
  app.add_option("--mode", o.mode, "stationary | transient");
  app.add_option("--spacing", o.spacing, "Stationary sample spacing");
  app.add_option("--N-list", o.n_list, "Server counts for scaling")->delimiter(',');
  app.add_flag("--simulate", "Attach a simulated estimate to the blocking report");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fixed-point", "Fixed point pi, rates lambda_hat and residual"},
      {"mean-field", "Mean-field trajectory CSV"},
      {"diffusion", "Stationary OU mean, covariance and spectrum"},
      {"simulate", "Blocking estimate by exact simulation"},
      {"fluctuations", "Fluctuation samples and their moments against theory"},
      {"blocking", "First-order blocking approximation"},
      {"scaling", "Error-scaling experiment over N"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  if (argc > 1 && argv[1][0] != '-') {
    const std::string first = argv[1];
    const bool known = std::any_of(commands.begin(), commands.end(),
                                   [&](const auto& c) { return c.first == first; });
    if (!known) return report(err, CliError{kUsage, "usage", "unknown subcommand '" + first + "'"});
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return report(err, CliError{kUsage, "usage", e.what()});
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const json cfg = resolve_config(app, o);
    if (!cfg.at("output_dir").is_string()) config_error("output_dir must be a string");
    OutputDir dir(cfg.at("output_dir").get<std::string>());

    if (command == "fixed-point") run_fixed_point(cfg, dir);
    else if (command == "mean-field") run_mean_field(cfg, dir);
    else if (command == "diffusion") run_diffusion(cfg, dir);
    else if (command == "simulate") run_simulate(cfg, dir);
    else if (command == "fluctuations") run_fluctuations(cfg, dir);
    else if (command == "blocking") run_blocking(cfg, dir);
    else if (command == "scaling") run_scaling(cfg, dir);

    json manifest{{"tool", "jsqd"},
                  {"version", JSQD_VERSION},
                  {"command", command},
                  {"created_at", utc_timestamp()},
                  {"seed", cfg.at("simulation").at("seed")},
                  {"config", cfg},
                  {"files", dir.files()}};
    write_file_atomic(dir.path() / "manifest.json", dump(manifest));
    out << (dir.path() / "manifest.json").string() << '\n';
    return kOk;
  } catch (const CliError& e) {
    return report(err, e);
  } catch (const Error& e) {
    return report(err, CliError{exit_code_for(e.kind()), std::string(to_string(e.kind())), e.what()});
  } catch (const std::exception& e) {
    return report(err, CliError{kComputation, "internal", e.what()});
  }
}

}  // namespace jsqd::cli
