#include <gtest/gtest.h>

#include "gradient_cases.hpp"

namespace {

constexpr int kInstances = 20;

void run_case(const gradcheck::Case& c, std::uint64_t seed) {
  geonet::Rng rng(seed);
  std::size_t checked = 0, kinks = 0;
  for (int i = 0; i < kInstances; ++i) {
    auto inst = c.make(rng);
    const auto res = gradcheck::check(inst.loss, inst.inputs);
    EXPECT_EQ(res.failures, 0u) << c.name << " instance " << i << ": " << res.first_failure;
    checked += res.checked;
    kinks += res.kinks;
  }
  EXPECT_GT(checked, 0u);
  // Kinks are measure-zero; only near-ties inside a finite-difference step hit them.
  EXPECT_LE(kinks * 20, checked + kinks) << c.name << ": too many non-differentiable points";
}

class OpGradient : public testing::TestWithParam<gradcheck::Case> {};
class SubnetworkGradient : public testing::TestWithParam<gradcheck::Case> {};

TEST_P(OpGradient, MatchesCentralDifferences) { run_case(GetParam(), 101); }
TEST_P(SubnetworkGradient, MatchesCentralDifferences) { run_case(GetParam(), 202); }

std::string case_name(const testing::TestParamInfo<gradcheck::Case>& info) { return info.param.name; }

INSTANTIATE_TEST_SUITE_P(Ops, OpGradient, testing::ValuesIn(gradcheck::op_cases()), case_name);
INSTANTIATE_TEST_SUITE_P(Subnetworks, SubnetworkGradient, testing::ValuesIn(gradcheck::subnetwork_cases()),
                         case_name);

TEST(GradCheck, DetectsWrongGradient) {
  // A deliberately broken op: forward x^2, backward claims x.
  geonet::Tensor x({3}, {0.5, -1.0, 2.0}, true);
  auto broken = [&] {
    std::vector<double> v;
    for (double a : x.values()) v.push_back(a * a);
    return geonet::sum(geonet::detail::make_result({3}, v, {x}, [x](geonet::detail::Node& self) mutable {
      auto g = x.mutable_grad();
      for (std::size_t i = 0; i < 3; ++i) g[i] += self.grad[i] * x.at(i);
    }));
  };
  EXPECT_GT(gradcheck::check(broken, {x}).failures, 0u);
}

TEST(GradCheck, FlagsReluKinkAtZero) {
  geonet::Tensor x({2}, {0.0, 1.0}, true);
  const auto res = gradcheck::check([&] { return geonet::sum(geonet::relu(x)); }, {x});
  EXPECT_EQ(res.kinks, 1u);
  EXPECT_EQ(res.checked, 1u);
  EXPECT_EQ(res.failures, 0u);
}

}  // namespace
