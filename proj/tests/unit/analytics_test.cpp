#include "jsqd/analytics.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "jsqd/diffusion.hpp"
#include "oracles.hpp"

namespace jsqd {
namespace {

TEST(ErlangBTest, SmallValues) {
  EXPECT_DOUBLE_EQ(erlang_b(1.0, 1), 0.5);
  EXPECT_DOUBLE_EQ(erlang_b(2.0, 2), 0.4);
  EXPECT_THROW(erlang_b(-1.0, 2), Error);
  EXPECT_THROW(erlang_b(1.0, 0), Error);
}

TEST(ErlangBTest, AgainstDirectSum) {
  for (double a : {0.1, 0.9, 3.0, 17.5, 80.0}) {
    double prev = 1.0;
    for (int n = 1; n <= 60; ++n) {
      const double b = erlang_b(a, n);
      EXPECT_NEAR(b, oracle::erlang_b_direct(a, n), 1e-11 * b);
      EXPECT_LT(b, prev);
      prev = b;
    }
  }
}

TEST(NormalTest, Values) {
  EXPECT_NEAR(normal_pdf(0.0), 0.3989422804014327, 1e-16);
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(-5.0), 2.866515718791939e-7, 1e-21);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
}

TEST(HalfinWhittTest, Values) {
  EXPECT_NEAR(halfin_whitt_limit(0.0, 1), 0.7978845608, 1e-10);
  EXPECT_NEAR(halfin_whitt_limit(0.0, 4), 0.3989422804, 1e-10);
  EXPECT_NEAR(halfin_whitt_limit(5.0, 1), 1.4867195147342977e-6 / (1.0 - 2.866515718791939e-7),
              1e-18);
  EXPECT_NEAR(halfin_whitt_limit(-5.0, 1), 1.4867195147342977e-6 / 2.866515718791939e-7, 1e-9);
  for (double beta : {-1.0, 0.3, 2.0}) {
    const double base = halfin_whitt_limit(beta, 1);
    for (int c : {2, 5, 9, 100}) {
      EXPECT_NEAR(halfin_whitt_limit(beta, c) * std::sqrt(static_cast<double>(c)), base, 1e-14);
    }
  }
}

TEST(HalfinWhittTest, ErlangBApproachesLimit) {
  const double beta = 1.0;
  const std::int64_t n = 1000000;
  const double load = static_cast<double>(n) - beta * std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(std::sqrt(static_cast<double>(n)) * erlang_b(load, n), halfin_whitt_limit(beta, 1),
              2e-3);
}

TEST(BlockingApproximationTest, SingleChoiceMatchesErlangB) {
  for (double sigma : {0.5, 2.0, 6.0}) {
    for (int c = 1; c <= 8; ++c) {
      const auto fp = fixed_point(ModelParams(10, c, 1, sigma, 0.0));
      EXPECT_NEAR(fp.pi[c], erlang_b(sigma, c), 1e-10);
    }
  }
}

TEST(BlockingApproximationTest, UnitCapacityExample) {
  const ModelParams p(100, 1, 2, 1.0, 1.0);
  const auto fp = fixed_point(p);
  const auto r = blocking_approximation(fp, stationary_kappa(fp, p), p);
  const double pi1 = (std::sqrt(5.0) - 1.0) / 2.0;
  EXPECT_EQ(r.servers, 100);
  EXPECT_NEAR(r.pi_c_d, pi1 * pi1, 1e-12);
  EXPECT_NEAR(r.kappa_term, -0.027639320225, 1e-10);
  EXPECT_NEAR(r.beta_term, 0.061803398875, 1e-10);
  EXPECT_NEAR(r.first_order, 0.3478019326, 1e-9);
}

TEST(BlockingApproximationTest, Identities) {
  for (double beta : {0.0, 0.5, 2.0}) {
    const ModelParams p(400, 4, 3, 3.0, beta);
    const auto fp = fixed_point(p);
    const auto kappa = stationary_kappa(fp, p);
    const auto r = blocking_approximation(fp, kappa, p);
    EXPECT_EQ(r.first_order, r.pi_c_d - r.kappa_term - r.beta_term);
    EXPECT_NEAR(r.pi_c_d, std::pow(fp.pi[4], 3), 1e-15);
    if (beta == 0.0) {
      EXPECT_EQ(r.kappa_term, 0.0);
      EXPECT_EQ(r.beta_term, 0.0);
      EXPECT_EQ(r.first_order, r.pi_c_d);
    }
    EXPECT_NEAR(std::sqrt(400.0) * (r.first_order - r.pi_c_d), scaling_constant(fp, kappa, p),
                1e-12);
  }
}

TEST(BlockingApproximationTest, WeightedSumTelescopes) {
  std::mt19937_64 gen(61);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 1 + trial % 7;
    std::vector<double> v(static_cast<std::size_t>(c) + 1, 0.0);
    double sum = 0.0;
    for (int i = 1; i <= c; ++i) sum += (v[static_cast<std::size_t>(i)] = normal(gen));
    EXPECT_NEAR(weighted_kappa_sum(FluctuationVector(v)), sum, 1e-12);
  }
}

TEST(BlockingApproximationTest, CapacityMismatchRejected) {
  const ModelParams p(100, 2, 2, 1.0, 1.0);
  const auto fp = fixed_point(p);
  EXPECT_THROW(blocking_approximation(fp, FluctuationVector(3), p), Error);
}

TEST(SummaryTest, IndependentSamples) {
  std::vector<FluctuationSample> samples;
  const double z[][2] = {{1.0, 2.0}, {3.0, 2.0}, {2.0, 5.0}, {2.0, -1.0}};
  for (const auto& row : z) samples.push_back({0, 0.0, FluctuationVector({0.0, row[0], row[1]})});
  const auto s = summarize_fluctuations(samples);
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(s.mean(1), 2.0);
  EXPECT_DOUBLE_EQ(s.cov(0, 0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.cov(1, 1), 6.0);
  EXPECT_DOUBLE_EQ(s.cov(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(s.standard_error(1), std::sqrt(6.0 / 4.0));
}

TEST(SummaryTest, BatchMeansSeeSerialCorrelation) {
  // AR(1) with coefficient 0.9: the iid standard error is too small by
  // roughly sqrt((1 + 0.9) / (1 - 0.9)).
  std::mt19937_64 gen(67);
  std::normal_distribution<double> normal;
  std::vector<FluctuationSample> samples;
  double x = 0.0;
  for (int k = 0; k < 40000; ++k) {
    x = 0.9 * x + normal(gen);
    samples.push_back({0, static_cast<double>(k), FluctuationVector({0.0, x})});
  }
  const double iid = summarize_fluctuations(samples).standard_error(0);
  const double batched = summarize_fluctuations(samples, 20).standard_error(0);
  EXPECT_GT(batched / iid, 0.6 * std::sqrt(19.0));
  EXPECT_LT(batched / iid, 1.6 * std::sqrt(19.0));
  EXPECT_THROW(summarize_fluctuations(std::span<const FluctuationSample>{}), Error);
}

TEST(ScalingTest, RowsAreConsistent) {
  const ModelParams p(100, 2, 2, 2.0, 1.0);
  SimConfig sim(p);
  sim.horizon = 60.0;
  sim.warmup = 20.0;
  sim.replications = 2;
  const auto rows = error_scaling_experiment(p, {25, 100}, sim);
  ASSERT_EQ(rows.size(), 2u);
  const auto fp = fixed_point(p);
  for (const auto& r : rows) {
    const double root = std::sqrt(static_cast<double>(r.servers));
    EXPECT_NEAR(r.pi_c_d, fp.pi[2] * fp.pi[2], 1e-12);
    EXPECT_NEAR(r.scaled_error_mean_field, root * (r.simulated - r.pi_c_d), 1e-12);
    EXPECT_NEAR(r.scaled_error_first_order, root * (r.simulated - r.first_order), 1e-12);
    EXPECT_NEAR(root * (r.first_order - r.pi_c_d), r.theoretical_constant, 1e-12);
    EXPECT_GT(r.ci_halfwidth, 0.0);
  }
  std::ostringstream os;
  write_scaling_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "N,simulated,pi_C_d,first_order,sqrtN_err_mean_field,theoretical_constant,"
            "sqrtN_err_first_order,ci_halfwidth");
}

}  // namespace
}  // namespace jsqd
