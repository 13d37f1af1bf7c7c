#include <gtest/gtest.h>

#include <cmath>

#include "geonet/fusion.hpp"
#include "gradcheck.hpp"

using namespace geonet;

TEST(Fuse, EvalIsPlainConcatenation) {
  Rng rng(1);
  const std::vector<Tensor> feats{gradcheck::random_tensor({2, 3}, rng), gradcheck::random_tensor({2, 2}, rng)};
  const auto f = fuse(feats, 0.1, 0.8, rng, false);
  const auto c = concat(feats, 1);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(f.at(i), c.at(i));
}

TEST(Fuse, FullSizeFeatureWidthsSumTo860) {
  Rng rng(2);
  std::vector<Tensor> feats;
  for (std::size_t d : {400, 50, 50, 50, 300, 10}) feats.push_back(Tensor::zeros({1, d}));
  EXPECT_EQ(fuse(feats, 0.0, 1.0, rng, true).dim(1), 860u);
}

TEST(Fuse, NoiseStandardDeviation) {
  Rng rng(3);
  const auto f = fuse({Tensor::zeros({1, 100000})}, 0.1, 1.0, rng, true);
  double s = 0, s2 = 0;
  for (double v : f.values()) {
    s += v;
    s2 += v * v;
  }
  const double n = 100000, mean = s / n;
  EXPECT_NEAR(std::sqrt(s2 / n - mean * mean), 0.1, 0.005);
}

TEST(FusionClassifier, ZeroWeights) {
  Rng rng(4);
  FusionClassifier clf(3, 4, 5, rng);
  ParamSet ps;
  clf.register_params(ps, "");
  for (const auto& e : ps.entries()) std::fill(e.tensor.node().value.begin(), e.tensor.node().value.end(), 0.0);
  const auto r = clf.penultimate(gradcheck::random_tensor({2, 3}, rng));
  for (double v : r.values()) EXPECT_EQ(v, 0.0);
  const auto p = clf.classify(r);
  for (double v : p.values()) EXPECT_NEAR(v, 0.2, 1e-15);
  EXPECT_EQ(argmax_rows(p), (std::vector<std::int32_t>{0, 0}));
}

TEST(FusionClassifier, PenultimateStaysInsideOpenInterval) {
  Rng rng(5);
  FusionClassifier clf(4, 400, 3, rng);
  EXPECT_EQ(clf.penultimate_dim(), 400u);
  const auto r = clf.penultimate(gradcheck::random_tensor({3, 4}, rng, 3.0));
  for (double v : r.values()) EXPECT_LT(std::abs(v), 1.0);
}

TEST(FusionClassifier, SoftmaxShiftInvariance) {
  Rng rng(6);
  const auto logits = gradcheck::random_tensor({2, 4}, rng);
  const auto p = softmax(logits), q = softmax(add_scalar(logits, 7.5));
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p.at(i), q.at(i), 1e-12);
}

TEST(ExtremaLoss, ReferenceValues) {
  EXPECT_NEAR(extrema_loss(Tensor({1, 4}, {1, -1, 1, -1}), 0.1).item(), 0.0, 1e-15);
  EXPECT_NEAR(extrema_loss(Tensor({1, 1}, {0.0}), 0.1).item(), 0.1, 1e-15);
  EXPECT_NEAR(extrema_loss(Tensor({1, 2}, {0.5, -0.5}), 0.1).item(), 0.075, 1e-15);
}

TEST(ExtremaLoss, EvenAndMaximalAtZero) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(5);
    for (double& x : v) x = rng.uniform(-0.999, 0.999);
    const Tensor r({1, 5}, v);
    const double l = extrema_loss(r, 0.1).item();
    EXPECT_NEAR(l, extrema_loss(neg(r), 0.1).item(), 1e-15);
    EXPECT_LE(l, 0.1 + 1e-15);
  }
}

TEST(Fusion, TotalGradientIsSumOfParts) {
  Rng rng(8);
  FusionClassifier clf(3, 4, 3, rng);
  const auto x = gradcheck::random_tensor({2, 3}, rng);
  const std::vector<std::int32_t> labels{0, 2};
  auto grad_of = [&](bool ce, bool extrema) {
    ParamSet ps;
    FusionClassifier copy = clf;
    copy.register_params(ps, "");
    ps.zero_grad();
    const auto r = copy.penultimate(x);
    Tensor loss = Tensor::scalar(0.0);
    if (ce) loss = add(loss, cross_entropy(copy.classify(r), labels));
    if (extrema) loss = add(loss, extrema_loss(r, 0.1));
    loss.backward();
    std::vector<double> g(clf.w_r().grad().begin(), clf.w_r().grad().end());
    return g;
  };
  const auto total = grad_of(true, true), a = grad_of(true, false), b = grad_of(false, true);
  for (std::size_t i = 0; i < total.size(); ++i) EXPECT_NEAR(total[i], a[i] + b[i], 1e-14);
}

TEST(Fusion, ZeroNoiseAndAlphaMatchPlainPathBitwise) {
  Rng a(9), b(9);
  const std::vector<Tensor> feats{Tensor({1, 3}, {0.1, -0.2, 0.3})};
  const auto plain = dropout(concat(feats, 1), 0.8, a, true);
  const auto fused = fuse(feats, 0.0, 0.8, b, true);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(plain.at(i), fused.at(i));
  EXPECT_EQ(a.next_u64(), b.next_u64());
}
