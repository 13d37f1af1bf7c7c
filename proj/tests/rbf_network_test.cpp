#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geonet/rbf_network.hpp"
#include "geonet/synthetic.hpp"
#include "geonet/trainer.hpp"

using namespace geonet;

namespace {

Tensor column(std::vector<double> u) {
  const std::size_t n = u.size();
  return Tensor({n, 1}, std::move(u));
}

std::size_t argmax_bin(const std::vector<BinWeight>& rows) {
  return static_cast<std::size_t>(std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
                                    return a.mean_weight < b.mean_weight;
                                  }) - rows.begin());
}

}  // namespace

TEST(Rbf, PeakAndOneSigma) {
  const Tensor mu({3}, {0.2, 0.5, 0.8}), sigma({3}, {0.1, 0.05, 0.2});
  const auto r = rbf_forward(column({0.5, 0.7}), mu, sigma);
  EXPECT_EQ(r.at(0, 1), 1.0);
  EXPECT_NEAR(r.at(0, 0), std::exp(-0.5 * 9.0), 1e-15);
  EXPECT_NEAR(r.at(1, 1), std::exp(-0.5 * 16.0), 1e-15);
  const auto s = rbf_forward(column({0.3, 0.1}), mu, sigma);
  EXPECT_NEAR(s.at(0, 0), 0.60653, 5e-6);
  EXPECT_NEAR(s.at(1, 0), 0.60653, 5e-6);
}

TEST(Rbf, BoundedAndSymmetric) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double mu = rng.uniform(), sigma = rng.uniform(0.001, 1.0), d = rng.uniform(0.0, 0.2);
    const auto r = rbf_forward(column({mu + d, mu - d}), Tensor({1}, {mu}), Tensor({1}, {sigma}));
    EXPECT_GT(r.at(0, 0), 0.0);
    EXPECT_LE(r.at(0, 0), 1.0);
    EXPECT_NEAR(r.at(0, 0), r.at(1, 0), 1e-12);
  }
}

TEST(RbfNetwork, EvenInitialisationAndSigmaFloor) {
  RbfNetwork net(50);
  EXPECT_EQ(net.bins(), 50u);
  EXPECT_NEAR(net.mu().at(0), 0.01, 1e-15);
  EXPECT_NEAR(net.mu().at(49), 0.99, 1e-15);
  EXPECT_NEAR(net.sigma().at(7), 0.01, 1e-15);
  ParamSet ps;
  net.register_params(ps, "t.");
  auto sigma = ps.get("t.sigma");
  sigma.values()[3] = -0.4;
  net.clamp_sigma();
  EXPECT_EQ(net.sigma().at(3), kDefaultSigmaFloor);
  EXPECT_THROW(RbfNetwork(0), std::invalid_argument);
  EXPECT_EQ(RbfNetwork(10).forward(std::vector<double>{0.3, 0.4}).shape(), (Shape{2, 10}));
}

TEST(BinProfile, ExactHitAndThreshold) {
  RbfNetwork net(5);
  const std::vector<double> inputs(4, net.mu().at(3));
  const auto rows = bin_weight_profile(net, inputs);
  EXPECT_EQ(rows[3].mean_weight, 1.0);
  EXPECT_FALSE(rows[3].excluded);
  EXPECT_TRUE(rows[0].excluded);
  EXPECT_THROW(bin_weight_profile(net, std::vector<double>{}), std::invalid_argument);

  // Mean weight exactly at the threshold is retained.
  RbfNetwork edge(1);
  const double mu = edge.mu().at(0), sigma = edge.sigma().at(0);
  const double d = sigma * std::sqrt(-2.0 * std::log(kBinExclusionThreshold));
  const auto at_threshold = bin_weight_profile(edge, std::vector<double>{mu + d});
  EXPECT_NEAR(at_threshold[0].mean_weight, kBinExclusionThreshold, 1e-15);
  BinWeight exact{0, mu, sigma, kBinExclusionThreshold, false};
  exact.excluded = exact.mean_weight < kBinExclusionThreshold;
  EXPECT_FALSE(exact.excluded);
}

TEST(BinProfile, CityWithoutExamplesIsAnError) {
  RbfNetwork net(4);
  std::vector<EncodedExample> ex(2);
  ex[0].label_id = 1;
  ex[1].label_id = 1;
  EXPECT_NO_THROW(bin_weight_profile(net, ex, 1, &EncodedExample::tweet_time));
  EXPECT_THROW(bin_weight_profile(net, ex, 2, &EncodedExample::tweet_time), std::invalid_argument);
}

TEST(BinProfile, CsvRows) {
  std::ostringstream out;
  write_profile_header(out);
  write_profile_rows(out, "a,b", {BinWeight{2, 0.5, 0.1, 0.25, false}});
  EXPECT_EQ(out.str(), "city,bin_index,mu,sigma,mean_weight,excluded\n\"a,b\",2,0.500000,0.100000,0.250000,0\n");
}

TEST(BinProfile, TrainedCitiesWithDistantPeaksUseDifferentBins) {
  SyntheticConfig sc;
  sc.cities = 2;
  sc.cities_per_timezone = 1;  // offsets -11 h and +1 h
  sc.train = 400;
  sc.dev = 100;
  sc.test = 0;
  const auto corpus = generate_synthetic(sc);
  const double gap = std::fmod(std::abs(corpus.cities[1].peak_utc_hour - corpus.cities[0].peak_utc_hour), 24.0);
  ASSERT_GE(std::min(gap, 24.0 - gap), 6.0);
  const auto vocabs = build_vocabularies(corpus.train, 1);
  ModelConfig mc;
  mc.features = FeatureSet{}.with(Feature::TweetTime);
  mc.tweet_time_bins = 24;
  mc.penultimate_dim = 8;
  mc.set_vocab_sizes(vocabs);
  const auto train_set = encode_all(corpus.train, vocabs, mc.encoder());
  const auto dev_set = encode_all(corpus.dev, vocabs, mc.encoder());
  TrainConfig tc;
  tc.batch_size = 32;
  tc.epochs = 3;
  tc.learning_rate = 0.01;
  const auto trained = train(mc, train_set, dev_set, {}, tc);
  EXPECT_GT(trained.report.epochs.back().accepted_dev_accuracy, 0.9);
  const RbfNetwork& rbf = *trained.model->tweet_time();
  const auto a = bin_weight_profile(rbf, train_set, vocabs.cities.id(corpus.cities[0].label), &EncodedExample::tweet_time);
  const auto b = bin_weight_profile(rbf, train_set, vocabs.cities.id(corpus.cities[1].label), &EncodedExample::tweet_time);
  EXPECT_NE(argmax_bin(a), argmax_bin(b));
  for (double s : rbf.sigma().values()) EXPECT_GE(s, kDefaultSigmaFloor);
}
