// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "zkd/maxent.hpp"
#include "zkd/rng.hpp"

namespace zkd {
namespace {

double total_variation(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += 0.5 * std::abs(a[k] - b[k]);
  return s;
}

TEST(ExpectationAt, KnownValues) {
  const LogitVector l{0.0, 1.0};
  EXPECT_NEAR(expectation_at(l, std::log(3.0)), 0.75, 1e-15);
  const LogitVector m{-1.0, 0.5, 2.0, 4.5};
  EXPECT_NEAR(expectation_at(m, 0.0), 1.5, 1e-15);
}

TEST(ExpectationAt, IncreasesTowardMax) {
  const LogitVector l{-2.0, 0.3, 1.0, 2.5, 2.4};
  double prev = -INFINITY;
  for (double beta = -8.0; beta <= 20.0; beta += 0.05) {
    const double e = expectation_at(l, beta);
    EXPECT_GT(e, prev) << "beta " << beta;
    EXPECT_LT(e, 2.5);
    prev = e;
  }
  EXPECT_NEAR(expectation_at(l, 400.0), 2.5, 1e-12);
}

TEST(SolveMultiplier, BinaryClosedForm) {
  const auto s = solve_multiplier({LogitVector{0.0, 1.0}, 0.75});
  EXPECT_NEAR(s.multiplier, std::log(3.0), 1e-8);
  EXPECT_NEAR(s.multiplier, 1.0986123, 1e-7);
  EXPECT_NEAR(s.distribution[1], 0.75, 1e-10);
  EXPECT_NEAR(s.partition, 4.0, 1e-8);
}

TEST(SolveMultiplier, MeanTargetGivesZero) {
  const LogitVector l{3.0, -1.0, 0.5, 1.5};
  const auto s = solve_multiplier({l, 1.0});
  EXPECT_NEAR(s.multiplier, 0.0, 1e-10);
  for (double q : s.distribution) EXPECT_NEAR(q, 0.25, 1e-10);
}

TEST(SolveMultiplier, BoundaryTargetsAreUnattainable) {
  const LogitVector l{0.0, 1.0, 3.0};
  EXPECT_THROW(solve_multiplier({l, 3.0}), UnattainableConstraint);
  EXPECT_THROW(solve_multiplier({l, 0.0}), UnattainableConstraint);
  EXPECT_THROW(solve_multiplier({l, 5.0}), UnattainableConstraint);
  EXPECT_THROW(solve_multiplier({LogitVector{1.0, 1.0}, 1.0}), UnattainableConstraint);
}

TEST(SolveMultiplier, NeedsBracketExpansion) {
  const LogitVector l{0.0, 1.0, 2.0};
  const auto s = solve_multiplier({l, 1.999});
  EXPECT_GT(s.multiplier, 4.0);
  EXPECT_LE(s.residual, 1e-10);
}

TEST(SolveMultiplier, SolutionInvariants) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> v(6);
    for (double& x : v) x = 3.0 * rng.normal();
    const LogitVector l(v);
    const double t = expectation_at(l, rng.uniform(-2.0, 2.0));
    const auto s = solve_multiplier({l, t});
    double e = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) {
      EXPECT_NEAR(s.distribution[k], std::exp(s.multiplier * l[k]) / s.partition, 1e-10);
      e += l[k] * s.distribution[k];
    }
    EXPECT_NEAR(e, t, 1e-10);
  }
}

TEST(PrimalOracle, BinaryCase) {
  const auto p = primal_maxent_oracle({LogitVector{0.0, 1.0}, 0.75});
  EXPECT_NEAR(p[0], 0.25, 1e-9);
  EXPECT_NEAR(p[1], 0.75, 1e-9);
}

TEST(PrimalOracle, MeanTargetIsUniform) {
  const auto p = primal_maxent_oracle({LogitVector{3.0, -1.0, 0.5, 1.5}, 1.0});
  for (double q : p) EXPECT_NEAR(q, 0.25, 1e-10);
}

TEST(PrimalOracle, AgreesWithDualOnFiveClasses) {
  Rng rng(17);
  std::vector<double> v(5);
  for (double& x : v) x = 2.0 * rng.normal();
  const LogitVector l(v);
  const MaxEntProblem problem{l, expectation_at(l, 0.6)};
  const auto dual = solve_multiplier(problem);
  const auto primal = primal_maxent_oracle(problem);
  EXPECT_LT(total_variation(dual.distribution.values(), primal.values()), 1e-6);
  EXPECT_NEAR(dual.multiplier, 0.6, 1e-8);
}

TEST(PrimalOracle, NoFeasibleDistributionHasMoreEntropy) {
  Rng rng(23);
  const LogitVector l{-1.0, 0.0, 0.5, 2.0, 3.0, 1.0};
  const MaxEntProblem problem{l, 1.7};
  const auto best = solve_multiplier(problem);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> p(l.size());
    double sum = 0.0;
    for (double& x : p) sum += (x = rng.uniform());
    for (double& x : p) x /= sum;
    const auto feasible = project_feasible(problem, p);
    double e = 0.0, h = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) {
      EXPECT_GE(feasible[k], 0.0);
      e += l[k] * feasible[k];
      if (feasible[k] > 0.0) h -= feasible[k] * std::log(feasible[k]);
    }
    EXPECT_NEAR(e, 1.7, 1e-9);
    EXPECT_LE(h, best.entropy + 1e-12);
  }
}

TEST(InteriorFeasible, StrictlyPositiveAndOnConstraint) {
  const LogitVector l{0.0, 1.0, 5.0};
  for (double t : {0.01, 2.0, 4.99}) {
    const auto p = interior_feasible({l, t});
    double e = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_GT(p[k], 0.0);
      e += l[k] * p[k];
      sum += p[k];
    }
    EXPECT_NEAR(e, t, 1e-14);
    EXPECT_NEAR(sum, 1.0, 1e-15);
  }
}

TEST(VerifyKdForm, SameLogitsSameMultiplier) {
  const LogitVector v{2.0, -0.5, 1.0, 0.0};
  const auto s = verify_kd_form(v, v, 0.8);
  EXPECT_NEAR(s.multiplier, 0.8, 1e-8);
}

TEST(VerifyKdForm, DoubledStudentHalvesMultiplier) {
  const LogitVector v{2.0, -0.5, 1.0, 0.0};
  const LogitVector z{4.0, -1.0, 2.0, 0.0};
  const auto s = verify_kd_form(v, z, 0.8);
  EXPECT_NEAR(s.multiplier, 0.4, 1e-8);
  EXPECT_GT(std::abs(s.multiplier - 0.8), 0.1);
}

TEST(VerifyKdForm, RandomInstanceIsBoltzmann) {
  Rng rng(8);
  std::vector<double> a(7), b(7);
  for (double& x : a) x = rng.normal();
  for (double& x : b) x = 2.0 * rng.normal();
  const LogitVector v(a), z(b);
  const auto s = verify_kd_form(v, z, 1.3);
  std::vector<double> qv(7);
  double zv = 0.0;
  for (std::size_t k = 0; k < 7; ++k) zv += (qv[k] = std::exp(1.3 * v[k]));
  double target = 0.0, got = 0.0;
  for (std::size_t k = 0; k < 7; ++k) {
    target += z[k] * qv[k] / zv;
    got += z[k] * s.distribution[k];
    EXPECT_NEAR(s.distribution[k], std::exp(s.multiplier * z[k] - s.log_partition), 1e-10);
  }
  EXPECT_NEAR(got, target, 1e-10);
}

TEST(VerifyKdForm, Errors) {
  EXPECT_THROW(verify_kd_form({1.0, 2.0}, {1.0, 2.0, 3.0}, 1.0), ShapeError);
  EXPECT_THROW(verify_kd_form({1.0, 2.0}, {1.0, 1.0}, 1.0), DegenerateLogits);
}

}  // namespace
}  // namespace zkd
