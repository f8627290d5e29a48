#include "jsqd/simulator.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jsqd/analytics.hpp"
#include "jsqd/diffusion.hpp"
#include "oracles.hpp"

namespace jsqd {
namespace {

AggregateState sample_state() { return AggregateState({3, 3, 4}); }

TEST(RngTest, StreamsAreReproducibleAndDistinct) {
  Rng a(7, 0), b(7, 0), c(7, 1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng(7, 0).next(), c.next());
  EXPECT_EQ(stream_seed(7, 3), splitmix64(7 ^ splitmix64(3 + 0x9e3779b97f4a7c15ULL)));
  // Reference output of the SplitMix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(RngTest, VariateRanges) {
  Rng r(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(5), 5u);
    sum += r.exponential(4.0);
  }
  EXPECT_NEAR(sum / 100000, 0.25, 0.005);
}

TEST(AggregateStateTest, FactoriesAndTails) {
  const auto empty = AggregateState::all_empty(10, 3);
  EXPECT_EQ(empty.count(0), 10);
  EXPECT_EQ(empty.jobs(), 0);
  EXPECT_EQ(empty.tail_at(1), 0.0);
  const auto s = sample_state();
  EXPECT_EQ(s.servers(), 10);
  EXPECT_EQ(s.jobs(), 11);
  EXPECT_DOUBLE_EQ(s.tail_at(1), 0.7);
  EXPECT_DOUBLE_EQ(s.tail()[2], 0.4);
  EXPECT_THROW(AggregateState({0, 0}), Error);
  EXPECT_THROW(AggregateState({1, -1}), Error);
}

TEST(AggregateStateTest, RoundingBound) {
  std::mt19937_64 gen(51);
  for (int trial = 0; trial < 100; ++trial) {
    const OccupancyTail u(oracle::random_tail(6, gen));
    for (std::int64_t n : {1, 7, 100, 12345}) {
      const auto s = AggregateState::rounded(u, n);
      EXPECT_EQ(s.servers(), n);
      for (int k = 1; k <= 6; ++k) {
        EXPECT_LE(std::abs(static_cast<double>(n) * (s.tail_at(k) - u[k])), 0.5 + 1e-9);
      }
    }
  }
}

TEST(SamplingTest, AllFullAlwaysBlocks) {
  const ModelParams p(5, 2, 2, 1.0, 0.0);
  const AggregateState full({0, 0, 5});
  Rng rng(1);
  int blocked = 0;
  for (int i = 0; i < 1000; ++i) {
    auto s = full;
    const auto kind = fire_event(s, p, rng);
    ASSERT_NE(kind, EventKind::kAccepted);
    if (kind == EventKind::kBlocked) {
      EXPECT_EQ(s, full);
      ++blocked;
    }
  }
  EXPECT_GT(blocked, 0);
  AggregateState e = AggregateState::all_empty(5, 2);
  EXPECT_EQ(sample_min_level(e, 3, rng), 0);
}

TEST(SamplingTest, MinimumLevelLaw) {
  const auto s = sample_state();
  const double x[] = {1.0, 0.7, 0.4, 0.0};
  for (int d : {1, 2, 3}) {
    Rng rng(100 + d);
    const int draws = 200000;
    int hits[3] = {0, 0, 0};
    for (int i = 0; i < draws; ++i) ++hits[sample_min_level(s, d, rng)];
    for (int n = 0; n < 3; ++n) {
      const double p = std::pow(x[n], d) - std::pow(x[n + 1], d);
      const double se = std::sqrt(p * (1 - p) / draws);
      EXPECT_NEAR(static_cast<double>(hits[n]) / draws, p, 4 * se + 1e-12) << "d=" << d;
    }
  }
}

TEST(SamplingTest, WithoutReplacementLaw) {
  const auto s = sample_state();
  Rng rng(9);
  const int draws = 200000;
  int full = 0;
  for (int i = 0; i < draws; ++i) full += sample_min_level(s, 2, rng, SamplingMode::kWithoutReplacement) == 2;
  const double p = (4.0 * 3.0) / (10.0 * 9.0);
  EXPECT_NEAR(static_cast<double>(full) / draws, p, 4 * std::sqrt(p * (1 - p) / draws));
  Rng r2(1);
  EXPECT_EQ(sample_min_level(AggregateState({2, 0, 0}), 2, r2, SamplingMode::kWithoutReplacement), 0);
  EXPECT_THROW(sample_min_level(AggregateState({2, 0, 0}), 3, r2, SamplingMode::kWithoutReplacement),
               Error);
}

TEST(EventTest, SingleChoiceAcceptance) {
  const ModelParams p(10, 2, 1, 1.0, 0.0);
  Rng rng(5);
  int arrivals = 0, accepted = 0;
  for (int i = 0; i < 200000; ++i) {
    auto s = sample_state();
    const auto kind = fire_event(s, p, rng);
    if (kind != EventKind::kDeparture) ++arrivals;
    if (kind == EventKind::kAccepted) ++accepted;
  }
  // Arrival share N lambda / (N lambda + jobs) = 10 / 21.
  EXPECT_NEAR(static_cast<double>(arrivals) / 200000, 10.0 / 21.0, 0.005);
  EXPECT_NEAR(static_cast<double>(accepted) / arrivals, 0.6, 0.006);
}

TEST(EventTest, Conservation) {
  const ModelParams p(37, 4, 3, 3.0, 1.0);
  auto s = AggregateState::all_empty(37, 4);
  Rng rng(11);
  for (int i = 0; i < 50000; ++i) {
    step(s, p, rng);
    std::int64_t total = 0, jobs = 0;
    for (int k = 0; k <= 4; ++k) {
      ASSERT_GE(s.count(k), 0);
      total += s.count(k);
      jobs += k * s.count(k);
    }
    ASSERT_EQ(total, 37);
    ASSERT_EQ(jobs, s.jobs());
  }
}

TEST(SimConfigTest, Validation) {
  SimConfig c(ModelParams(10, 2, 2, 1.0, 0.0));
  c.horizon = 10.0;
  c.warmup = 10.0;
  EXPECT_THROW(validate(c), Error);
  c.warmup = 1.0;
  validate(c);
  c.initial = AggregateState::all_empty(11, 2);
  EXPECT_THROW(validate(c), Error);
  c.initial.reset();
  c.replications = 1;
  EXPECT_THROW(estimate_blocking(c), Error);
  SimConfig w(ModelParams(2, 2, 3, 1.0, 0.0));
  w.sampling = SamplingMode::kWithoutReplacement;
  EXPECT_THROW(validate(w), Error);
}

TEST(SimulationTest, Deterministic) {
  SimConfig c(ModelParams(50, 2, 2, 2.0, 0.5));
  c.horizon = 50.0;
  c.warmup = 5.0;
  c.record_trajectory = true;
  EXPECT_EQ(run_replication(c, 3), run_replication(c, 3));
  EXPECT_NE(run_replication(c, 3).arrivals, run_replication(c, 4).arrivals);
  c.replications = 4;
  c.threads = 3;
  const auto a = estimate_blocking(c);
  c.threads = 1;
  const auto b = estimate_blocking(c);
  EXPECT_EQ(a.replication_estimates, b.replication_estimates);
  ASSERT_TRUE(a.trajectory);
  EXPECT_EQ(a.trajectory->times.size(), 51u);
}

TEST(SimulationTest, SingleServerIsErlangLoss) {
  SimConfig c(ModelParams(1, 3, 2, 2.0, 0.0));
  c.horizon = 20000.0;
  c.replications = 4;
  const auto out = estimate_blocking(c);
  const double er = oracle::erlang_b_direct(2.0, 3);
  EXPECT_NEAR(er, 0.2105263, 1e-7);
  EXPECT_NEAR(out.blocking_estimate, er, 3 * out.ci_halfwidth + 0.005);
}

TEST(SimulationTest, LightLoadRarelyBlocks) {
  SimConfig c(ModelParams(100, 5, 2, 0.05, 0.0));
  c.horizon = 400.0;
  c.warmup = 200.0;
  c.replications = 2;
  const auto out = estimate_blocking(c);
  EXPECT_GT(out.arrivals, 0);
  EXPECT_LT(out.blocking_estimate, 1e-4);
}

TEST(SimulationTest, DegenerateRunReported) {
  SimConfig c(ModelParams(1, 1, 1, 1e-9, 0.0));
  c.horizon = 1.0;
  c.warmup = 0.5;
  try {
    run_replication(c, 0);
    FAIL() << "expected degenerate-run";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateRun);
  }
}

TEST(FluctuationTest, GridMismatchRejected) {
  const ModelParams p(100, 2, 2, 2.0, 0.0);
  SimConfig c(p);
  c.horizon = 5.0;
  c.sample_dt = 0.5;
  const auto mf = integrate_mean_field(OccupancyTail::empty(2), p, 2.0, 0.1);
  try {
    fluctuation_samples(c, TransientMode{mf});
    FAIL() << "expected configuration error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
  }
  c.sample_dt = 0.1;
  c.horizon = 1.0;
  EXPECT_THROW(fluctuation_samples(c, TransientMode{mf}), Error);
  c.warmup = 0.0;
  EXPECT_THROW(fluctuation_samples(c, StationaryMode{1.0}), Error);
}

TEST(FluctuationTest, TransientStartsAtRoundingOffset) {
  const ModelParams p(101, 2, 2, 2.0, 0.0);
  SimConfig c(p);
  c.horizon = 1.0;
  c.sample_dt = 0.01;
  c.replications = 3;
  const OccupancyTail u0({1.0, 0.5, 0.25});
  const auto mf = integrate_mean_field(u0, p, 0.02, 0.01);
  const auto samples = fluctuation_samples(c, TransientMode{mf});
  ASSERT_EQ(samples.size(), 9u);
  const auto start = AggregateState::rounded(u0, 101);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& z = samples[3 * r].z;
    EXPECT_EQ(samples[3 * r].replication, r);
    EXPECT_EQ(samples[3 * r].time, 0.0);
    EXPECT_NEAR(z[1], std::sqrt(101.0) * (start.tail_at(1) - 0.5), 1e-12);
    EXPECT_LE(std::abs(z[2]), 0.5 / std::sqrt(101.0) + 1e-12);
  }
}

TEST(FluctuationTest, StationaryMeanNearZeroWithoutBeta) {
  SimConfig c(ModelParams(400, 2, 2, 2.0, 0.0));
  c.warmup = 20.0;
  c.horizon = 20.0 + 799.0;
  c.replications = 2;
  const auto samples = fluctuation_samples(c, StationaryMode{1.0});
  ASSERT_EQ(samples.size(), 1600u);
  EXPECT_EQ(samples[1].time, 21.0);
  const auto s = summarize_fluctuations(samples, 20);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE(std::abs(s.mean(i)), 4 * s.standard_error(i) + 0.05);
  }
}

TEST(FluctuationTest, SecondMomentStableInN) {
  const ModelParams base(100, 2, 2, 2.0, 1.0);
  const auto fp = fixed_point(base);
  std::vector<double> second;
  for (std::int64_t n : {100, 400, 1600}) {
    SimConfig c(base.with_servers(n));
    c.warmup = 20.0;
    c.horizon = 20.0 + 299.0;
    c.replications = 2;
    const auto samples = fluctuation_samples(c, StationaryMode{1.0});
    double sum = 0.0;
    for (const auto& s : samples) sum += s.z.interior_vector().squaredNorm();
    second.push_back(sum / static_cast<double>(samples.size()));
  }
  const auto stats = stationary_stats(fp, base);
  const double theory = stats.sigma.trace() + stats.kappa.interior_vector().squaredNorm();
  for (double m : second) {
    EXPECT_GT(m, 0.5 * theory);
    EXPECT_LT(m, 2.0 * theory);
  }
}

}  // namespace
}  // namespace jsqd
