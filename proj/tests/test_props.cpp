// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "zkd/props.hpp"

namespace zkd::props {
namespace {

const PropertyResult& find(const std::vector<PropertyResult>& rs, const std::string& name) {
  for (const auto& r : rs) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("no property " + name);
}

// Standardization with the sample (K - 1) standard deviation.
std::vector<double> sample_std_zscore(const LogitVector& z, double tau) {
  double m = 0.0;
  for (double x : z) m += x;
  m /= static_cast<double>(z.size());
  double ss = 0.0;
  for (double x : z) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(z.size() - 1));
  std::vector<double> out;
  for (double x : z) out.push_back((x - m) / (sd * tau));
  return out;
}

TEST(PropertySuite, AllPassOnTheLibrary) {
  const auto rs = run_property_suite({1000, 0});
  EXPECT_EQ(rs.size(), 13u);
  for (const auto& r : rs) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.counterexample;
    EXPECT_EQ(r.cases, 1000u);
  }
  EXPECT_TRUE(all_passed(rs));
}

TEST(PropertySuite, DeterministicPerSeed) {
  const auto a = run_property_suite({10, 7});
  const auto b = run_property_suite({10, 7});
  const auto c = run_property_suite({10, 8});
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].worst, b[i].worst);
    differs = differs || a[i].worst != c[i].worst;
  }
  EXPECT_TRUE(differs);
}

TEST(PropertySuite, SampleStdDivisorIsCaught) {
  const auto rs = run_property_suite({200, 0}, sample_std_zscore);
  const auto& std_prop = find(rs, "zscore.std_equals_inverse_tau");
  EXPECT_FALSE(std_prop.passed);
  EXPECT_NE(std_prop.counterexample.find("z=["), std::string::npos);
  EXPECT_FALSE(all_passed(rs));
  // The larger divisor only shrinks the values, so the bound still holds.
  EXPECT_TRUE(find(rs, "zscore.bounded_by_sqrt_k_minus_1_over_tau").passed);
  EXPECT_TRUE(find(rs, "zscore.zero_mean").passed);
}

TEST(PropertySuite, MissingMeanSubtractionIsCaught) {
  const auto rs = run_property_suite({50, 0}, [](const LogitVector& z, double tau) {
    const double sd = logit_stats(z).std;
    std::vector<double> out;
    for (double x : z) out.push_back(x / (sd * tau));
    return out;
  });
  EXPECT_FALSE(find(rs, "zscore.zero_mean").passed);
  EXPECT_FALSE(find(rs, "zscore.positive_affine_invariant").passed);
}

TEST(Helpers, FiniteDifferenceOfQuadratic) {
  const auto g = finite_difference(
      [](const std::vector<double>& x) { return x[0] * x[0] + 3.0 * x[1]; }, {2.0, -1.0});
  EXPECT_NEAR(g[0], 4.0, 1e-9);
  EXPECT_NEAR(g[1], 3.0, 1e-9);
  EXPECT_EQ(relative_error(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0}), 0.0);
  EXPECT_NEAR(relative_error(std::vector<double>{2.0}, std::vector<double>{1.0}), 0.5, 1e-15);
}

}  // namespace
}  // namespace zkd::props
