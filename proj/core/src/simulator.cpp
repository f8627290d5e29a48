#include "jsqd/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jsqd {

AggregateState::AggregateState(std::vector<std::int64_t> counts)
    : counts_(std::move(counts)) {
  if (counts_.size() < 2) {
    throw Error(ErrorKind::kInvalidState, "aggregate state needs C+1 >= 2 levels");
  }
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (counts_[k] < 0) {
      throw Error(ErrorKind::kInvalidState, "aggregate state has a negative count");
    }
    servers_ += counts_[k];
    jobs_ += static_cast<std::int64_t>(k) * counts_[k];
  }
  if (servers_ < 1) {
    throw Error(ErrorKind::kInvalidState, "aggregate state has no servers");
  }
}

AggregateState AggregateState::all_empty(std::int64_t servers, int capacity) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(capacity) + 1, 0);
  counts[0] = servers;
  return AggregateState(std::move(counts));
}

AggregateState AggregateState::rounded(const OccupancyTail& u, std::int64_t servers) {
  const int c = u.capacity();
  const auto n = static_cast<double>(servers);
  // Rounding is monotone, so the rounded tail stays non-increasing.
  std::vector<std::int64_t> tail(static_cast<std::size_t>(c) + 2, 0);
  tail[0] = servers;
  for (int k = 1; k <= c; ++k) tail[static_cast<std::size_t>(k)] = std::llround(n * u[k]);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(c) + 1);
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] = tail[k] - tail[k + 1];
  return AggregateState(std::move(counts));
}

double AggregateState::tail_at(int n) const {
  std::int64_t at_least = 0;
  for (std::size_t k = static_cast<std::size_t>(n); k < counts_.size(); ++k) {
    at_least += counts_[k];
  }
  return static_cast<double>(at_least) / static_cast<double>(servers_);
}

OccupancyTail AggregateState::tail() const {
  std::vector<double> u(counts_.size());
  std::int64_t at_least = 0;
  for (std::size_t k = counts_.size(); k-- > 0;) {
    at_least += counts_[k];
    u[k] = static_cast<double>(at_least) / static_cast<double>(servers_);
  }
  return OccupancyTail(std::move(u));
}

void AggregateState::shift(int from, int to) {
  --counts_[static_cast<std::size_t>(from)];
  ++counts_[static_cast<std::size_t>(to)];
  jobs_ += to - from;
}

namespace {

// Level of the server with index `j` when servers are ordered by level.
int level_of(std::span<const std::int64_t> counts, std::uint64_t j) {
  std::uint64_t cumulative = 0;
  const int top = static_cast<int>(counts.size()) - 1;
  for (int k = 0; k < top; ++k) {
    cumulative += static_cast<std::uint64_t>(counts[static_cast<std::size_t>(k)]);
    if (j < cumulative) return k;
  }
  return top;
}

}  // namespace

int sample_min_level(const AggregateState& state, int choices, Rng& rng,
                     SamplingMode mode) {
  const auto n = static_cast<std::uint64_t>(state.servers());
  int best = state.capacity();
  if (mode == SamplingMode::kWithReplacement) {
    for (int i = 0; i < choices && best > 0; ++i) {
      best = std::min(best, level_of(state.counts(), rng.below(n)));
    }
    return best;
  }
  if (static_cast<std::uint64_t>(choices) > n) {
    throw Error(ErrorKind::kConfiguration,
                "sampling without replacement needs d <= N");
  }
  std::vector<std::int64_t> remaining(state.counts().begin(), state.counts().end());
  for (int i = 0; i < choices; ++i) {
    const int level = level_of(remaining, rng.below(n - static_cast<std::uint64_t>(i)));
    --remaining[static_cast<std::size_t>(level)];
    best = std::min(best, level);
  }
  return best;
}

double holding_time(const AggregateState& state, const ModelParams& params, Rng& rng) {
  const double arrival = static_cast<double>(state.servers()) * params.arrival_rate();
  return rng.exponential(arrival + static_cast<double>(state.jobs()));
}

EventKind fire_event(AggregateState& state, const ModelParams& params, Rng& rng,
                     SamplingMode mode) {
  const double arrival = static_cast<double>(state.servers()) * params.arrival_rate();
  const double total = arrival + static_cast<double>(state.jobs());
  if (rng.uniform() * total < arrival) {
    const int level = sample_min_level(state, params.choices(), rng, mode);
    if (level == state.capacity()) return EventKind::kBlocked;
    state.shift(level, level + 1);
    return EventKind::kAccepted;
  }
  // Departure from level k with probability k counts[k] / jobs.
  std::uint64_t j = rng.below(static_cast<std::uint64_t>(state.jobs()));
  const auto counts = state.counts();
  for (int k = 1; k < static_cast<int>(counts.size()); ++k) {
    const auto weight = static_cast<std::uint64_t>(k) *
                        static_cast<std::uint64_t>(counts[static_cast<std::size_t>(k)]);
    if (j < weight) {
      state.shift(k, k - 1);
      return EventKind::kDeparture;
    }
    j -= weight;
  }
  throw Error(ErrorKind::kInvalidState, "departure weight exceeds job count");
}

StepResult step(AggregateState& state, const ModelParams& params, Rng& rng,
                SamplingMode mode) {
  StepResult r;
  r.elapsed = holding_time(state, params, rng);
  r.kind = fire_event(state, params, rng, mode);
  return r;
}

double default_warmup(const ModelParams& params) {
  return std::max(20.0, 10.0 / std::min(1.0, params.sigma()));
}

void validate(const SimConfig& config) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfiguration, msg); };
  if (!(config.warmup >= 0.0)) fail("warmup must be >= 0");
  if (!(config.horizon > config.warmup) || !std::isfinite(config.horizon)) {
    fail("horizon must be finite and exceed warmup");
  }
  if (config.replications < 1) fail("replications must be >= 1");
  if (!(config.sample_dt > 0.0)) fail("sample_dt must be > 0");
  if (config.initial) {
    if (config.initial->servers() != config.params.servers() ||
        config.initial->capacity() != config.params.capacity()) {
      fail("initial state does not match N and C");
    }
  }
  if (config.sampling == SamplingMode::kWithoutReplacement &&
      config.params.choices() > config.params.servers()) {
    fail("sampling without replacement needs d <= N");
  }
}

namespace {

AggregateState initial_state(const SimConfig& config) {
  if (config.initial) return *config.initial;
  const FixedPoint fp = fixed_point(config.params);
  return AggregateState::rounded(fp.pi, config.params.servers());
}

// Event loop over [0, horizon]. `observe(k, state)` is called for each
// sample time sample_times[k] with the state in force at that instant.
template <class Observe>
std::pair<std::int64_t, std::int64_t> run_chain(const SimConfig& config,
                                                AggregateState state, Rng& rng,
                                                std::span<const double> sample_times,
                                                Observe&& observe) {
  std::int64_t accepted = 0;
  std::int64_t blocked = 0;
  std::size_t next_sample = 0;
  double t = 0.0;
  for (;;) {
    const double t_next = t + holding_time(state, config.params, rng);
    while (next_sample < sample_times.size() && sample_times[next_sample] < t_next) {
      observe(next_sample, state);
      ++next_sample;
    }
    if (t_next > config.horizon) break;
    const EventKind kind = fire_event(state, config.params, rng, config.sampling);
    if (t_next >= config.warmup) {
      if (kind == EventKind::kAccepted) ++accepted;
      if (kind == EventKind::kBlocked) ++blocked;
    }
    t = t_next;
  }
  return {accepted, blocked};
}

}  // namespace

ReplicationOutcome run_replication(const SimConfig& config, std::uint64_t index) {
  validate(config);
  Rng rng(config.seed, index);
  ReplicationOutcome out;
  out.replication = index;

  std::vector<double> sample_times;
  Trajectory traj;
  if (config.record_trajectory) {
    sample_times = time_grid(config.horizon, config.sample_dt);
    traj.times = sample_times;
    traj.states.reserve(sample_times.size());
  }
  const auto [accepted, blocked] =
      run_chain(config, initial_state(config), rng, sample_times,
                [&](std::size_t, const AggregateState& s) { traj.states.push_back(s.tail()); });

  out.arrivals = accepted + blocked;
  out.blocked = blocked;
  if (out.arrivals == 0) {
    std::ostringstream os;
    os << "replication " << index << " observed no arrivals after warmup";
    throw Error(ErrorKind::kDegenerateRun, os.str());
  }
  out.blocking_estimate = static_cast<double>(blocked) / static_cast<double>(out.arrivals);
  if (config.record_trajectory) out.trajectory = std::move(traj);
  return out;
}

SimOutcome estimate_blocking(const SimConfig& config) {
  validate(config);
  if (config.replications < 2) {
    throw Error(ErrorKind::kConfiguration,
                "estimate_blocking needs at least two replications for a CI");
  }
  const auto reps = static_cast<std::size_t>(config.replications);
  // Resolve the fixed point once rather than per replication.
  SimConfig resolved = config;
  if (!resolved.initial) resolved.initial = initial_state(config);

  std::vector<ReplicationOutcome> results(reps);
  parallel_for(reps, config.threads, [&](std::size_t i) {
    SimConfig local = resolved;
    local.record_trajectory = config.record_trajectory && i == 0;
    results[i] = run_replication(local, i);
  });

  SimOutcome out;
  out.seed = config.seed;
  double sum = 0.0;
  for (const auto& r : results) {
    out.replication_estimates.push_back(r.blocking_estimate);
    out.arrivals += r.arrivals;
    out.blocked += r.blocked;
    sum += r.blocking_estimate;
  }
  const double mean = sum / static_cast<double>(reps);
  double ss = 0.0;
  for (double x : out.replication_estimates) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(reps - 1));
  out.blocking_estimate = mean;
  out.ci_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(reps));
  out.trajectory = std::move(results.front().trajectory);
  return out;
}

namespace {

FluctuationVector scaled_deviation(const AggregateState& s, const OccupancyTail& center) {
  const double root_n = std::sqrt(static_cast<double>(s.servers()));
  const OccupancyTail x = s.tail();
  std::vector<double> z(x.size(), 0.0);
  for (std::size_t n = 1; n < x.size(); ++n) z[n] = root_n * (x[n] - center[n]);
  return FluctuationVector(std::move(z));
}

bool same_time(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

std::vector<FluctuationSample> transient_samples(const SimConfig& config,
                                                 const TransientMode& mode) {
  const Trajectory& mf = mode.mean_field;
  if (mf.times.empty() || mf.states.size() != mf.times.size()) {
    throw Error(ErrorKind::kConfiguration, "mean-field trajectory is empty or ragged");
  }
  if (mf.states.front().capacity() != config.params.capacity()) {
    throw Error(ErrorKind::kConfiguration, "mean-field trajectory does not match C");
  }
  for (std::size_t k = 0; k < mf.times.size(); ++k) {
    if (!same_time(mf.times[k], static_cast<double>(k) * config.sample_dt)) {
      std::ostringstream os;
      os << "mean-field grid point " << k << " (t=" << mf.times[k]
         << ") is not on the sampling grid with spacing " << config.sample_dt;
      throw Error(ErrorKind::kConfiguration, os.str());
    }
  }
  if (mf.times.back() > config.horizon) {
    throw Error(ErrorKind::kConfiguration, "mean-field trajectory extends past horizon");
  }

  SimConfig run = config;
  run.warmup = 0.0;
  const AggregateState start =
      AggregateState::rounded(mf.states.front(), config.params.servers());
  const auto reps = static_cast<std::size_t>(config.replications);
  std::vector<std::vector<FluctuationSample>> per_rep(reps);
  parallel_for(reps, config.threads, [&](std::size_t i) {
    Rng rng(config.seed, i);
    auto& out = per_rep[i];
    out.reserve(mf.times.size());
    run_chain(run, start, rng, mf.times, [&](std::size_t k, const AggregateState& s) {
      out.push_back({i, mf.times[k], scaled_deviation(s, mf.states[k])});
    });
  });
  std::vector<FluctuationSample> all;
  for (auto& v : per_rep) {
    all.insert(all.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  return all;
}

std::vector<FluctuationSample> stationary_samples(const SimConfig& config,
                                                  const StationaryMode& mode) {
  if (!(config.warmup > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "stationary sampling requires warmup > 0");
  }
  if (!(mode.spacing > 0.0)) {
    throw Error(ErrorKind::kConfiguration, "stationary sample spacing must be > 0");
  }
  const FixedPoint fp = fixed_point(config.params);
  const AggregateState start =
      config.initial ? *config.initial : AggregateState::rounded(fp.pi, config.params.servers());

  std::vector<double> times;
  for (double t = config.warmup; t <= config.horizon; ) {
    times.push_back(t);
    t = config.warmup + static_cast<double>(times.size()) * mode.spacing;
  }
  const auto reps = static_cast<std::size_t>(config.replications);
  std::vector<std::vector<FluctuationSample>> per_rep(reps);
  parallel_for(reps, config.threads, [&](std::size_t i) {
    Rng rng(config.seed, i);
    auto& out = per_rep[i];
    out.reserve(times.size());
    run_chain(config, start, rng, times, [&](std::size_t k, const AggregateState& s) {
      out.push_back({i, times[k], scaled_deviation(s, fp.pi)});
    });
  });
  std::vector<FluctuationSample> all;
  for (auto& v : per_rep) {
    all.insert(all.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  return all;
}

}  // namespace

std::vector<FluctuationSample> fluctuation_samples(const SimConfig& config,
                                                   const FluctuationMode& mode) {
  return std::visit(
      [&](const auto& m) -> std::vector<FluctuationSample> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TransientMode>) {
          // Transient sampling starts at t = 0; warmup does not apply.
          SimConfig run = config;
          run.warmup = 0.0;
          validate(run);
          return transient_samples(run, m);
        } else {
          validate(config);
          return stationary_samples(config, m);
        }
      },
      mode);
}

}  // namespace jsqd
