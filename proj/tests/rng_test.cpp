#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "geonet/adam.hpp"
#include "geonet/params.hpp"
#include "geonet/rng.hpp"

using geonet::Rng;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformStaysInUnitInterval) {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(2);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(s2 / n - mean * mean), 1.0, 0.01);
}

TEST(Rng, IndexIsUnbiasedAndBounded) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) counts.at(rng.index(7))++;
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
  EXPECT_EQ(rng.index(1), 0u);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(4);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
  std::sort(v.begin(), v.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(v[i], i);
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(Rng::derive(1, 0), Rng::derive(1, 1));
  EXPECT_EQ(Rng::derive(9, 3), Rng::derive(9, 3));
}

TEST(Init, XavierBoundAndRequiresGrad) {
  Rng rng(5);
  const auto w = geonet::init::xavier(30, 20, {30, 20}, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  EXPECT_TRUE(w.requires_grad());
  for (double x : w.values()) EXPECT_LE(std::abs(x), bound);
}

TEST(ParamSet, RejectsDuplicatesAndRoundTripsSnapshots) {
  geonet::ParamSet ps;
  ps.add("a", geonet::Tensor({2}, {1, 2}, true));
  EXPECT_THROW(ps.add("a", geonet::Tensor({1}, {0}, true)), std::invalid_argument);
  const auto snap = ps.snapshot();
  ps.get("a").node().value[0] = 9;
  ps.restore(snap);
  EXPECT_EQ(ps.get("a").at(0), 1.0);
  EXPECT_EQ(ps.scalar_count(), 2u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  geonet::ParamSet ps;
  auto& w = ps.add("w", geonet::Tensor({3}, {1.0, -2.0, 0.5}, true));
  auto g = w.mutable_grad();
  g[0] = 0.3;
  g[1] = -4.0;
  g[2] = 1e-3;
  geonet::Adam adam(ps, {0.01, 0.9, 0.999, 1e-8});
  adam.step();
  // With bias correction the first update is lr * g / (|g| + eps).
  EXPECT_NEAR(w.at(0), 1.0 - 0.01 * 0.3 / (0.3 + 1e-8), 1e-12);
  EXPECT_NEAR(w.at(1), -2.0 + 0.01 * 4.0 / (4.0 + 1e-8), 1e-12);
  EXPECT_NEAR(w.at(2), 0.5 - 0.01 * 1e-3 / (1e-3 + 1e-8), 1e-12);
  for (double x : w.grad()) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(adam.state().step_count, 1);
}

TEST(Adam, SecondStepMatchesHandComputation) {
  geonet::ParamSet ps;
  auto& w = ps.add("w", geonet::Tensor({1}, {0.0}, true));
  geonet::Adam adam(ps, {0.1, 0.9, 0.999, 1e-8});
  w.mutable_grad()[0] = 1.0;
  adam.step();
  w.mutable_grad()[0] = -1.0;
  adam.step();
  double m = 0.1, v = 0.001;  // after step one
  m = 0.9 * m - 0.1;
  v = 0.999 * v + 0.001;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  const double w1 = -0.1 * 1.0 / (1.0 + 1e-8);
  EXPECT_NEAR(w.at(0), w1 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8), 1e-12);
}
