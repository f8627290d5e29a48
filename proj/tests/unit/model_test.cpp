#include "jsqd/model.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace jsqd {
namespace {

TEST(ModelParamsTest, ArrivalRate) {
  EXPECT_DOUBLE_EQ(arrival_rate(ModelParams(100, 2, 2, 1.0, 0.0)), 1.0);
  EXPECT_DOUBLE_EQ(arrival_rate(ModelParams(100, 2, 2, 2.0, 1.0)), 1.9);
}

TEST(ModelParamsTest, RejectsNonPositiveArrivalRate) {
  try {
    ModelParams(4, 1, 1, 1.0, 3.0);
    FAIL() << "expected invalid-parameters";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidParameters);
  }
  // Exactly zero is also rejected.
  EXPECT_THROW(ModelParams(4, 1, 1, 1.0, 2.0), Error);
}

TEST(ModelParamsTest, RejectsBadIntegers) {
  EXPECT_THROW(ModelParams(0, 1, 1, 1.0, 0.0), Error);
  EXPECT_THROW(ModelParams(1, 0, 1, 1.0, 0.0), Error);
  EXPECT_THROW(ModelParams(1, 1, 0, 1.0, 0.0), Error);
  EXPECT_THROW(ModelParams(1, 1, 1, 0.0, 0.0), Error);
}

TEST(OccupancyTailTest, ClampsWithinTolerance) {
  OccupancyTail u({1.0, 0.5, 0.5 + 5e-13, -5e-13});
  EXPECT_EQ(u[2], 0.5);
  EXPECT_EQ(u[3], 0.0);
}

TEST(OccupancyTailTest, RejectsBeyondTolerance) {
  EXPECT_THROW(OccupancyTail({1.0, 0.4, 0.5}), Error);
  EXPECT_THROW(OccupancyTail({1.0, 0.4, -1e-6}), Error);
  EXPECT_THROW(OccupancyTail({0.9, 0.4}), Error);
  EXPECT_THROW(OccupancyTail({1.0}), Error);
}

TEST(FluctuationVectorTest, ComponentZeroMustVanish) {
  EXPECT_THROW(FluctuationVector({0.1, 0.0}), Error);
  FluctuationVector v({0.0, 1.0, 2.0});
  EXPECT_EQ(v.interior_vector(), Eigen::Vector2d(1.0, 2.0));
}

TEST(OperatorsTest, ConstantTail) {
  for (int d : {1, 2, 3}) {
    const ModelParams p(10, 4, d, 1.7, 0.3);
    const auto u = OccupancyTail::full(4);
    const auto a = w1(u, p);
    const auto b = w2(u);
    for (int n = 0; n <= 4; ++n) EXPECT_EQ(a[n], 0.0);
    for (int n = 0; n < 4; ++n) EXPECT_EQ(b[n], 0.0);
    EXPECT_EQ(b[4], 4.0);
  }
}

TEST(OperatorsTest, SmallCase) {
  const ModelParams p(10, 1, 2, 1.0, 0.0);
  const OccupancyTail u({1.0, 0.5});
  EXPECT_DOUBLE_EQ(w1(u, p)[1], 0.75);
  EXPECT_DOUBLE_EQ(w2(u)[1], 0.5);
  EXPECT_EQ(w1(u, p)[0], 0.0);
}

TEST(OperatorsTest, W3VanishesWithoutBeta) {
  std::mt19937_64 gen(3);
  const ModelParams p(50, 5, 2, 3.0, 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = w3(OccupancyTail(oracle::random_tail(5, gen)), p);
    for (double x : r.values()) EXPECT_EQ(x, 0.0);
  }
}

TEST(DriftTest, ScalarLinearCase) {
  const ModelParams p(10, 1, 1, 1.0, 0.0);
  EXPECT_NEAR(drift(OccupancyTail({1.0, 0.3}), p)[1], 0.4, 1e-15);
}

TEST(DriftTest, LiesInVForRandomTails) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 1 + static_cast<int>(gen() % 8);
    const int d = 1 + static_cast<int>(gen() % 4);
    const ModelParams p(100, c, d, 0.5 + (gen() % 100) / 10.0, 0.0);
    const auto h = drift(OccupancyTail(oracle::random_tail(c, gen)), p);
    EXPECT_EQ(h[0], 0.0);
    EXPECT_EQ(static_cast<int>(h.size()), c + 1);
  }
}

TEST(DriftTest, LipschitzOnRandomPairs) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 500; ++trial) {
    const int c = 1 + static_cast<int>(gen() % 8);
    const int d = 1 + static_cast<int>(gen() % 4);
    const ModelParams p(100, c, d, 0.2 + (gen() % 100) / 10.0, 0.0);
    const OccupancyTail a(oracle::random_tail(c, gen));
    const OccupancyTail b(oracle::random_tail(c, gen));
    const auto wa = drift(a, p), wb = drift(b, p);
    double lhs = 0.0, dist = 0.0;
    for (int n = 0; n <= c; ++n) {
      lhs += std::pow(wa[n] - wb[n], 2);
      dist += std::pow(a[n] - b[n], 2);
    }
    EXPECT_LE(std::sqrt(lhs), drift_lipschitz_bound(p) * std::sqrt(dist) + 1e-12);
  }
}

TEST(DriftTest, LipschitzBoundIsNotLoose) {
  // d = 1 makes W affine, so its Lipschitz constant is the norm of H.
  const ModelParams p(100, 5, 1, 10.0, 0.0);
  const double exact = operator_norm(build_drift_matrix(OccupancyTail::empty(5), p));
  EXPECT_LE(exact, drift_lipschitz_bound(p));
  EXPECT_GT(exact, 0.75 * drift_lipschitz_bound(p));
  EXPECT_GT(exact, 2.0 * std::sqrt(10.0 * 10.0 + 5.0 * 5.0));
}

TEST(DriftMatrixTest, ZeroSubdiagonalWeight) {
  const ModelParams p(10, 1, 2, 1.0, 0.0);
  const auto h = build_drift_matrix(OccupancyTail({1.0, 0.0}), p);
  EXPECT_EQ(h(0, 0), -1.0);
}

TEST(DriftMatrixTest, GoldenRatioCase) {
  const ModelParams p(10, 1, 2, 1.0, 0.0);
  const double a1 = (std::sqrt(5.0) - 1.0) / 2.0;
  const auto h = build_drift_matrix(OccupancyTail({1.0, a1}), p);
  EXPECT_NEAR(h(0, 0), -std::sqrt(5.0), 1e-15);  // -(2 a1 + 1)
}

TEST(DriftMatrixTest, SuperDiagonalIsRowIndex) {
  std::mt19937_64 gen(5);
  const ModelParams p(10, 3, 2, 2.5, 0.0);
  const auto h = build_drift_matrix(OccupancyTail(oracle::random_tail(3, gen)), p);
  EXPECT_EQ(h(0, 1), 1.0);
  EXPECT_EQ(h(1, 2), 2.0);
}

TEST(DriftMatrixTest, SingleChoiceIgnoresState) {
  const ModelParams p(10, 3, 1, 2.5, 0.0);
  const auto h = build_drift_matrix(OccupancyTail({1.0, 0.0, 0.0, 0.0}), p);
  EXPECT_EQ(h(1, 0), 2.5);
  EXPECT_EQ(h(2, 2), -(2.5 + 3));
}

TEST(DriftMatrixTest, TridiagonalAndNormBound) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 1 + static_cast<int>(gen() % 10);
    const int d = 1 + static_cast<int>(gen() % 4);
    const ModelParams p(100, c, d, 0.2 + (gen() % 100) / 10.0, 0.0);
    const auto h = build_drift_matrix(OccupancyTail(oracle::random_tail(c, gen)), p);
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j) {
        if (std::abs(i - j) > 1) EXPECT_EQ(h(i, j), 0.0);
      }
    }
    EXPECT_LT(operator_norm(h), drift_matrix_norm_bound(p));
  }
}

// H(a) v matches (W(a + eps v) - W(a)) / eps for interior a.
TEST(DriftMatrixTest, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 gen(29);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 2 + static_cast<int>(gen() % 6);
    const int d = 1 + static_cast<int>(gen() % 4);
    const ModelParams p(100, c, d, 0.5 + (gen() % 50) / 10.0, 0.0);
    // Strictly decreasing interior point, well inside U.
    std::vector<double> a(static_cast<std::size_t>(c) + 1);
    a[0] = 1.0;
    for (int n = 1; n <= c; ++n) a[n] = 0.9 * (c + 1 - n) / (c + 1.0) + 0.01 * unif(gen);
    std::vector<double> v(a.size(), 0.0);
    for (int n = 1; n <= c; ++n) v[n] = unif(gen);

    const double eps = 1e-7;
    std::vector<double> shifted = a;
    for (int n = 1; n <= c; ++n) shifted[n] += eps * v[n];
    const auto w0 = drift(OccupancyTail(a), p);
    const auto w_eps = drift(OccupancyTail(shifted), p);
    const auto hv = build_drift_matrix(OccupancyTail(a), p).apply(FluctuationVector(v));
    for (int n = 1; n <= c; ++n) {
      EXPECT_NEAR((w_eps[n] - w0[n]) / eps, hv[n], 1e-5 * (1.0 + p.sigma() * d));
    }
  }
}

}  // namespace
}  // namespace jsqd
