#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "jsqd/meanfield.hpp"
#include "jsqd/model.hpp"
#include "jsqd/rng.hpp"

namespace jsqd {

/// Servers grouped by occupancy: counts[k] servers hold exactly k jobs.
/// Routing under JSQ(d) depends only on these counts, so simulating them is
/// an exact lumping of the per-server chain.
class AggregateState {
 public:
  /// Throws kInvalidState on negative counts or zero servers.
  explicit AggregateState(std::vector<std::int64_t> counts);

  static AggregateState all_empty(std::int64_t servers, int capacity);
  /// X_n(0) = round(N u_n) / N for every n.
  static AggregateState rounded(const OccupancyTail& u, std::int64_t servers);

  std::int64_t servers() const noexcept { return servers_; }
  int capacity() const noexcept { return static_cast<int>(counts_.size()) - 1; }
  std::int64_t count(int level) const noexcept { return counts_[static_cast<std::size_t>(level)]; }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }
  /// Jobs in service, sum_k k counts[k].
  std::int64_t jobs() const noexcept { return jobs_; }

  /// Fraction of servers with at least n jobs.
  double tail_at(int n) const;
  OccupancyTail tail() const;

  /// Moves one server from `from` jobs to `to` jobs (|from - to| == 1).
  void shift(int from, int to);

  friend bool operator==(const AggregateState&, const AggregateState&) = default;

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t servers_ = 0;
  std::int64_t jobs_ = 0;
};

enum class SamplingMode { kWithReplacement, kWithoutReplacement };
enum class EventKind { kAccepted, kBlocked, kDeparture };

/// Least occupancy among d sampled servers.
int sample_min_level(const AggregateState& state, int choices, Rng& rng,
                     SamplingMode mode = SamplingMode::kWithReplacement);

struct StepResult {
  double elapsed = 0.0;
  EventKind kind = EventKind::kAccepted;
};

/// Holding time of the chain in `state`: exponential with rate N lambda_N + jobs.
double holding_time(const AggregateState& state, const ModelParams& params, Rng& rng);
/// Draws and applies the next transition (arrival with probability
/// N lambda_N / (N lambda_N + jobs), departure otherwise).
EventKind fire_event(AggregateState& state, const ModelParams& params, Rng& rng,
                     SamplingMode mode = SamplingMode::kWithReplacement);
/// holding_time followed by fire_event.
StepResult step(AggregateState& state, const ModelParams& params, Rng& rng,
                SamplingMode mode = SamplingMode::kWithReplacement);

/// max(20, 10 / min(1, sigma)).
double default_warmup(const ModelParams& params);

struct SimConfig {
  explicit SimConfig(ModelParams p) : params(std::move(p)) {}

  ModelParams params;
  std::uint64_t seed = 1;
  double warmup = 20.0;
  double horizon = 1000.0;
  int replications = 10;
  double sample_dt = 1.0;
  /// Starting state; the rounded fixed point when empty.
  std::optional<AggregateState> initial;
  SamplingMode sampling = SamplingMode::kWithReplacement;
  bool record_trajectory = false;
  /// Worker threads for replications; 0 means hardware concurrency.
  unsigned threads = 0;
};

/// Throws kConfiguration on inconsistent settings.
void validate(const SimConfig& config);

struct ReplicationOutcome {
  std::uint64_t replication = 0;
  double blocking_estimate = 0.0;
  std::int64_t arrivals = 0;
  std::int64_t blocked = 0;
  std::optional<Trajectory> trajectory;

  friend bool operator==(const ReplicationOutcome&, const ReplicationOutcome&) = default;
};

/// Simulates [0, horizon] on stream (seed, index). Blocking is counted over
/// arrivals after warmup. Throws kDegenerateRun if there were none.
ReplicationOutcome run_replication(const SimConfig& config, std::uint64_t index);

struct SimOutcome {
  double blocking_estimate = 0.0;
  /// 1.96 * sample std / sqrt(replications).
  double ci_halfwidth = 0.0;
  std::int64_t arrivals = 0;
  std::int64_t blocked = 0;
  std::uint64_t seed = 0;
  std::vector<double> replication_estimates;
  /// Sampled tails of replication 0 when record_trajectory is set.
  std::optional<Trajectory> trajectory;
};

/// Mean of per-replication estimates with a 95% normal interval.
/// Requires at least two replications.
SimOutcome estimate_blocking(const SimConfig& config);

/// Z(t_k) = sqrt(N) (X(t_k) - x(t_k, u0)) on the grid of `mean_field`, which
/// must be {0, sample_dt, 2 sample_dt, ...} within the horizon. Each
/// replication starts from the rounding of mean_field.states[0].
struct TransientMode {
  Trajectory mean_field;
};

/// sqrt(N) (X(t) - pi) at t = warmup + k spacing, k >= 0. Requires warmup > 0.
struct StationaryMode {
  double spacing = 1.0;
};

using FluctuationMode = std::variant<TransientMode, StationaryMode>;

struct FluctuationSample {
  std::uint64_t replication = 0;
  double time = 0.0;
  FluctuationVector z;
};

std::vector<FluctuationSample> fluctuation_samples(const SimConfig& config,
                                                   const FluctuationMode& mode);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn);

}  // namespace jsqd

#include "jsqd/detail/parallel.hpp"
