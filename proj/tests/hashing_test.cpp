#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "geonet/hashing.hpp"

using namespace geonet;

namespace {

BinaryCode from_string(const std::string& bits, std::int64_t id = 0, std::int32_t label = -1) {
  BinaryCode c(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) c.set(i, bits[i] == '1');
  c.id = id;
  c.label = label;
  return c;
}

BinaryCode random_code(Rng& rng, std::size_t width, std::int64_t id, std::int32_t label) {
  BinaryCode c(width);
  for (std::size_t i = 0; i < width; ++i) c.set(i, rng.bernoulli(0.5));
  c.id = id;
  c.label = label;
  return c;
}

// Character-by-character oracles, independent of the packed representation.
std::size_t naive_hamming(const BinaryCode& a, const BinaryCode& b) {
  const auto sa = a.to_string(), sb = b.to_string();
  std::size_t d = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) d += sa[i] != sb[i];
  return d;
}

double naive_ap(const std::vector<BinaryCode>& index, const BinaryCode& q) {
  std::vector<const BinaryCode*> order;
  for (const auto& c : index) order.push_back(&c);
  // Insertion sort by (distance, id).
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (std::size_t j = i; j > 0; --j) {
      const auto dj = naive_hamming(q, *order[j]), dp = naive_hamming(q, *order[j - 1]);
      if (dj < dp || (dj == dp && order[j]->id < order[j - 1]->id)) std::swap(order[j], order[j - 1]);
    }
  }
  double sum = 0.0;
  std::size_t relevant = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (order[k]->label != q.label) continue;
    ++relevant;
    std::size_t hits_at_k = 0;
    for (std::size_t j = 0; j <= k; ++j) hits_at_k += order[j]->label == q.label;
    sum += static_cast<double>(hits_at_k) / static_cast<double>(k + 1);
  }
  return relevant ? sum / static_cast<double>(relevant) : -1.0;
}

}  // namespace

TEST(Binarize, SignRule) {
  const std::vector<double> r = {0.7, -0.2, 0.0};
  EXPECT_EQ(binarize_sign(r).to_string(), "100");
  std::vector<double> wide(130);
  for (std::size_t i = 0; i < wide.size(); ++i) wide[i] = i % 3 == 0 ? 0.5 : -0.5;
  const auto c = binarize_sign(wide);
  ASSERT_EQ(c.words.size(), 3u);
  for (std::size_t i = 0; i < wide.size(); ++i) EXPECT_EQ(c.bit(i), i % 3 == 0);
  EXPECT_EQ(c.words[2] >> 2, 0u);  // unused bits stay clear
}

TEST(Hamming, ExamplesAndMismatch) {
  EXPECT_EQ(hamming(from_string("1010"), from_string("0110")), 2u);
  EXPECT_EQ(hamming(from_string("1111"), from_string("1111")), 0u);
  EXPECT_THROW(hamming(from_string("101"), from_string("1010")), std::invalid_argument);
}

TEST(Hamming, MetricPropertiesOnRandomTriples) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t w = 1 + rng.index(200);
    const auto a = random_code(rng, w, 0, 0), b = random_code(rng, w, 1, 0), c = random_code(rng, w, 2, 0);
    EXPECT_EQ(hamming(a, b), naive_hamming(a, b));
    EXPECT_EQ(hamming(a, a), 0u);
    EXPECT_EQ(hamming(a, b), hamming(b, a));
    EXPECT_LE(hamming(a, c), hamming(a, b) + hamming(b, c));
  }
}

TEST(Retrieve, OrdersByDistanceThenId) {
  const std::vector<BinaryCode> index = {from_string("1100", 5), from_string("0000", 3),
                                         from_string("1111", 1), from_string("0000", 2)};
  const auto ranking = retrieve(from_string("0000"), index);
  EXPECT_EQ(ranking, (std::vector<std::int64_t>{2, 3, 5, 1}));
  EXPECT_THROW(retrieve(from_string("0000"), std::span<const BinaryCode>{}), std::invalid_argument);
}

TEST(AveragePrecision, Examples) {
  EXPECT_NEAR(average_precision(std::vector<std::int64_t>{1, 2, 3}, {1, 3}), (1.0 + 2.0 / 3.0) / 2.0, 1e-12);
  for (std::int64_t n = 1; n <= 20; ++n) {
    std::vector<std::int64_t> ranking(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) ranking[static_cast<std::size_t>(i)] = i;
    EXPECT_NEAR(average_precision(ranking, {n - 1}), 1.0 / static_cast<double>(n), 1e-15);
    EXPECT_EQ(average_precision(ranking, {0}), 1.0);
  }
  EXPECT_THROW(average_precision(std::vector<std::int64_t>{1}, {}), std::invalid_argument);
  EXPECT_THROW(average_precision(std::vector<std::int64_t>{1}, {2}), std::invalid_argument);
}

TEST(AveragePrecision, IgnoresOrderBelowLastRelevant) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::int64_t> ranking(30);
    for (std::size_t i = 0; i < ranking.size(); ++i) ranking[i] = static_cast<std::int64_t>(i);
    rng.shuffle(std::span<std::int64_t>(ranking));
    std::unordered_set<std::int64_t> relevant;
    std::size_t last = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      if (rng.bernoulli(0.3) || relevant.empty()) {
        relevant.insert(ranking[i]);
        last = i;
      }
    }
    const double ap = average_precision(ranking, relevant);
    EXPECT_GT(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    auto tail_shuffled = ranking;
    rng.shuffle(std::span<std::int64_t>(tail_shuffled.data() + last + 1, tail_shuffled.size() - last - 1));
    EXPECT_EQ(average_precision(tail_shuffled, relevant), ap);
  }
}

TEST(MapEval, MatchesBruteForceOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t w = 1 + rng.index(24);
    const std::size_t n_index = 1 + rng.index(50), n_query = 1 + rng.index(50);
    const auto labels = static_cast<std::int32_t>(1 + rng.index(6));
    std::vector<BinaryCode> index, queries;
    for (std::size_t i = 0; i < n_index; ++i) {
      index.push_back(random_code(rng, w, static_cast<std::int64_t>(i), static_cast<std::int32_t>(rng.index(labels))));
    }
    // One label beyond the index's range forces some excluded queries.
    for (std::size_t i = 0; i < n_query; ++i) {
      queries.push_back(random_code(rng, w, static_cast<std::int64_t>(i), static_cast<std::int32_t>(rng.index(labels + 1))));
    }
    double sum = 0.0;
    std::size_t evaluated = 0, excluded = 0;
    for (const auto& q : queries) {
      const double ap = naive_ap(index, q);
      if (ap < 0) {
        ++excluded;
      } else {
        sum += ap;
        ++evaluated;
      }
    }
    const auto rep = map_eval(queries, index);
    EXPECT_EQ(rep.evaluated, evaluated);
    EXPECT_EQ(rep.excluded, excluded);
    EXPECT_NEAR(rep.map, evaluated ? sum / static_cast<double>(evaluated) : 0.0, 1e-12);
  }
}

TEST(MapEval, PerfectWhenEachLabelHasItsOwnCode) {
  std::vector<BinaryCode> index;
  for (std::int64_t i = 0; i < 12; ++i) {
    const auto label = static_cast<std::int32_t>(i % 3);
    index.push_back(from_string(std::string(static_cast<std::size_t>(label) * 3, '1') + std::string(9 - static_cast<std::size_t>(label) * 3, '0'), i, label));
  }
  const auto rep = map_eval(index, index);
  EXPECT_EQ(rep.map, 1.0);
  EXPECT_EQ(rep.evaluated, 12u);
  EXPECT_EQ(rep.excluded, 0u);
}

TEST(Lsh, ScaleInvariantAndAntipodal) {
  Rng rng(5);
  LshModel lsh(64, 10, rng);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(10), scaled(10), neg(10);
    for (std::size_t i = 0; i < 10; ++i) {
      x[i] = rng.normal();
      scaled[i] = 3.7 * x[i];
      neg[i] = -x[i];
    }
    EXPECT_EQ(lsh_encode(x, lsh), lsh_encode(scaled, lsh));
    EXPECT_EQ(hamming(lsh_encode(x, lsh), lsh_encode(neg, lsh)), 64u);
  }
  EXPECT_THROW(lsh_encode(std::vector<double>(9), lsh), std::invalid_argument);
}

TEST(Lsh, CollisionRateMatchesAngle) {
  Rng rng(6);
  LshModel lsh(10000, 2, rng);
  for (double theta : {0.3, 1.0, 2.0, 2.8}) {
    const std::vector<double> a = {1.0, 0.0}, b = {std::cos(theta), std::sin(theta)};
    const double agree = 1.0 - static_cast<double>(hamming(lsh_encode(a, lsh), lsh_encode(b, lsh))) / 10000.0;
    EXPECT_NEAR(agree, 1.0 - theta / std::numbers::pi, 0.02) << "theta " << theta;
  }
}

TEST(RawFeatures, LayoutAndNormalisation) {
  EncodedExample e;
  e.text_ids = {2, 2, 3, kPadId};
  e.location_ids = {4, kPadId};
  e.tweet_time = 0.75;
  e.utc_offset = 0.5;
  e.account_time = 0.0;
  e.timezone_id = 2;
  const auto x = raw_input_features(e, 5, 3);
  ASSERT_EQ(x.size(), 2u * 5 + 3 + 3);
  EXPECT_NEAR(x[2], 2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(x[3], 1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(x[5 + 4], 1.0);
  EXPECT_EQ(x[10], 0.25);
  EXPECT_EQ(x[11], 0.0);
  EXPECT_EQ(x[12], -0.5);
  EXPECT_EQ(x[13 + 2], 1.0);
  EXPECT_EQ(x[13], 0.0);
}

TEST(RHistogram, Masses) {
  const std::vector<double> v = {-1.0, -0.95, -0.9, -0.5, 0.0, 0.3, 0.9, 0.99, 1.0, 0.89};
  const auto h = r_histogram(v, 4);
  EXPECT_EQ(h.total, 10u);
  EXPECT_DOUBLE_EQ(h.low_mass, 0.3);
  EXPECT_DOUBLE_EQ(h.high_mass, 0.3);
  EXPECT_DOUBLE_EQ(h.middle_mass, 0.4);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{3, 1, 2, 4}));
  EXPECT_THROW(r_histogram(v, 0), std::invalid_argument);
}

TEST(CodeFile, RoundTripAndBitLayout) {
  CodeFile f;
  f.width = 10;
  f.seed = 42;
  f.codes = {from_string("1000000001", -3, 7), from_string("0110000000", 9, -1)};
  const auto bytes = encode_codes(f);
  ASSERT_EQ(bytes.size(), 8u + 4 + 4 + 8 + 8 + 2 * (8 + 4 + 2));
  const std::size_t first = 32 + 12;
  EXPECT_EQ(bytes[first], 0x80);      // bit 0 is the MSB of byte 0
  EXPECT_EQ(bytes[first + 1], 0x40);  // bit 9
  EXPECT_EQ(bytes[first + 14 + 0], 0x60);
  const auto back = decode_codes(bytes);
  EXPECT_EQ(back.width, 10u);
  EXPECT_EQ(back.seed, 42u);
  ASSERT_EQ(back.codes.size(), 2u);
  EXPECT_EQ(back.codes[0], f.codes[0]);
  EXPECT_EQ(back.codes[1], f.codes[1]);
  EXPECT_EQ(encode_codes(back), bytes);

  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_codes(bad), ArchiveError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_codes(truncated), ArchiveError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_codes(trailing), ArchiveError);
}
