// SPDX-License-Identifier: Apache-2.0
//
// Entropy maximization over the probability simplex subject to one linear
// expectation constraint sum_k l(k) q(k) = target. The stationary point of the
// Lagrangian is the Boltzmann form q(k) = exp(beta l(k)) / Z; solve_multiplier
// finds beta on the dual side, primal_maxent_oracle climbs the entropy
// directly, and the two are compared in tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "zkd/errors.hpp"
#include "zkd/logitcore.hpp"

namespace zkd {

struct MaxEntProblem {
  LogitVector logits;
  double target_expectation;
};

struct MaxEntSolution {
  double multiplier = 0.0;
  ProbabilityVector distribution{0.5, 0.5};
  double entropy = 0.0;
  double partition = 0.0;      // sum_k exp(multiplier * logit(k))
  double log_partition = 0.0;  // finite even when partition overflows
  double residual = 0.0;       // |E_q[logits] - target|
};

namespace detail {

inline std::vector<double> boltzmann(std::span<const double> logits, double multiplier) {
  std::vector<double> scaled(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) scaled[k] = multiplier * logits[k];
  return softmax(scaled, 1.0);
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline void check_attainable(const MaxEntProblem& problem) {
  const auto [lo, hi] =
      std::minmax_element(problem.logits.begin(), problem.logits.end());
  const double t = problem.target_expectation;
  if (!std::isfinite(t) || !(t > *lo && t < *hi)) {
    throw UnattainableConstraint(
        "target expectation must lie strictly between min and max logit");
  }
}

inline double entropy_of(std::span<const double> p) noexcept {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

/// Orthonormal-direction data for the affine set {sum p = 1, l . p = t}:
/// the centered logit direction c = l - mean(l) and its squared norm.
struct ConstraintBasis {
  std::vector<double> centered;
  double norm2 = 0.0;

  explicit ConstraintBasis(std::span<const double> l) : centered(l.size()) {
    const double m = mean(l);
    for (std::size_t k = 0; k < l.size(); ++k) {
      centered[k] = l[k] - m;
      norm2 += centered[k] * centered[k];
    }
  }

  /// Removes the components along 1 and along c.
  void project_tangent(std::span<double> g) const noexcept {
    const double gm = mean(g);
    const double gc = dot(g, centered) / norm2;
    for (std::size_t k = 0; k < g.size(); ++k) g[k] -= gm + gc * centered[k];
  }
};

}  // namespace detail

/// E_q[logits] under q = softmax(multiplier * logits).
inline double expectation_at(const LogitVector& logits, double multiplier) {
  const auto q = detail::boltzmann(logits.values(), multiplier);
  return detail::dot(logits.values(), q);
}

inline MaxEntSolution make_solution(const LogitVector& logits, double target,
                                    double multiplier) {
  MaxEntSolution sol;
  sol.multiplier = multiplier;
  auto q = detail::boltzmann(logits.values(), multiplier);
  sol.residual = std::abs(detail::dot(logits.values(), q) - target);
  sol.entropy = detail::entropy_of(q);
  double scaled_max = -std::numeric_limits<double>::infinity();
  for (double l : logits) scaled_max = std::max(scaled_max, multiplier * l);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(multiplier * l - scaled_max);
  sol.log_partition = scaled_max + std::log(sum);
  sol.partition = std::exp(sol.log_partition);
  sol.distribution = ProbabilityVector(std::move(q));
  return sol;
}

/// Bisection on the multiplier. The bracket starts at [-1, 1] and doubles
/// outward until it contains the target; iteration stops once the expectation
/// residual is <= tol or the bracket can no longer be split.
inline MaxEntSolution solve_multiplier(const MaxEntProblem& problem, double tol = 1e-10) {
  detail::require_positive(tol, "tol");
  detail::check_attainable(problem);
  const LogitVector& l = problem.logits;
  const double t = problem.target_expectation;

  double lo = -1.0;
  double hi = 1.0;
  while (expectation_at(l, hi) < t) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw UnattainableConstraint("bracket expansion overflowed");
  }
  while (expectation_at(l, lo) > t) {
    hi = lo;
    lo *= 2.0;
    if (!std::isfinite(lo)) throw UnattainableConstraint("bracket expansion overflowed");
  }

  double best = 0.5 * (lo + hi);
  double best_residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double e = expectation_at(l, mid);
    const double r = std::abs(e - t);
    if (r < best_residual) {
      best_residual = r;
      best = mid;
    }
    if (r <= tol || mid == lo || mid == hi) break;
    (e < t ? lo : hi) = mid;
  }
  return make_solution(l, t, best);
}

/// Alternating projection onto {simplex} and {l . p = t}: shift along the
/// centered logit direction onto the hyperplane, then clip negatives and
/// renormalize, until the shifted point is nonnegative.
inline std::vector<double> project_feasible(const MaxEntProblem& problem,
                                            std::vector<double> p,
                                            std::size_t max_iters = 100000) {
  detail::check_attainable(problem);
  const detail::ConstraintBasis basis(problem.logits.values());
  const auto l = problem.logits.values();
  for (std::size_t it = 0; it < max_iters; ++it) {
    const double shift = (problem.target_expectation - detail::dot(l, p)) / basis.norm2;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += shift * basis.centered[k];
    if (*std::min_element(p.begin(), p.end()) >= 0.0) return p;
    double sum = 0.0;
    for (double& x : p) {
      x = std::max(x, 0.0);
      sum += x;
    }
    for (double& x : p) x /= sum;
  }
  throw ConvergenceError("feasibility projection did not converge", std::move(p),
                         max_iters);
}

/// A strictly positive feasible point: the uniform distribution mixed with a
/// point mass on the largest (or smallest) logit, just enough to reach target.
inline std::vector<double> interior_feasible(const MaxEntProblem& problem) {
  detail::check_attainable(problem);
  const auto l = problem.logits.values();
  const std::size_t K = l.size();
  const double t = problem.target_expectation;
  const double u = detail::mean(l);
  std::vector<double> p(K, 1.0 / static_cast<double>(K));
  if (t == u) return p;
  const auto extreme = t > u ? std::max_element(l.begin(), l.end())
                             : std::min_element(l.begin(), l.end());
  const double a = (t - u) / (*extreme - u);
  for (double& x : p) x *= 1.0 - a;
  p[static_cast<std::size_t>(extreme - l.begin())] += a;
  return p;
}

/// Projected gradient ascent on the entropy, started from interior_feasible().
/// Steps move within the affine constraint set; each trial step of 0.1 is
/// halved until the iterate stays strictly positive and the directional
/// derivative has not changed sign. Stops when the projected gradient's infinity norm is <= tol.
inline ProbabilityVector primal_maxent_oracle(const MaxEntProblem& problem,
                                              double tol = 1e-10,
                                              std::size_t max_iters = 100000) {
  detail::require_positive(tol, "tol");
  detail::check_attainable(problem);
  const std::size_t K = problem.logits.size();
  const detail::ConstraintBasis basis(problem.logits.values());

  std::vector<double> p = interior_feasible(problem);

  constexpr double kStep = 0.1;
  constexpr double kTiny = 1e-300;
  auto ascent_direction = [&](std::span<const double> x) {
    std::vector<double> g(K);
    for (std::size_t k = 0; k < K; ++k) g[k] = -(std::log(std::max(x[k], kTiny)) + 1.0);
    basis.project_tangent(g);
    return g;
  };

  std::vector<double> trial(K);
  for (std::size_t it = 0; it < max_iters; ++it) {
    const std::vector<double> d = ascent_direction(p);
    double dnorm_inf = 0.0;
    for (double x : d) dnorm_inf = std::max(dnorm_inf, std::abs(x));
    if (dnorm_inf <= tol) {
      double sum = 0.0;
      for (double x : p) sum += x;
      for (double& x : p) x /= sum;
      return ProbabilityVector(std::move(p));
    }
    double step = kStep;
    bool accepted = false;
    while (step > 1e-30) {
      for (std::size_t k = 0; k < K; ++k) trial[k] = p[k] + step * d[k];
      if (*std::min_element(trial.begin(), trial.end()) > 0.0) {
        const std::vector<double> d_trial = ascent_direction(trial);
        if (detail::dot(d_trial, d) >= 0.0) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw ConvergenceError("line search failed in primal max-ent oracle", p, it);
    }
    p.swap(trial);
  }
  throw ConvergenceError("primal max-ent oracle hit the iteration cap", std::move(p),
                         max_iters);
}

/// Forms the distillation max-ent problem for the student: its expectation
/// target is sum_k student(k) q_v(k), with q_v the teacher's Boltzmann
/// distribution at teacher_multiplier. The solution is again a Boltzmann
/// distribution over the student's own logits, with its own multiplier.
inline MaxEntSolution verify_kd_form(const LogitVector& teacher, const LogitVector& student,
                                     double teacher_multiplier, double tol = 1e-10) {
  if (teacher.size() != student.size()) {
    throw ShapeError("teacher and student logits differ in length");
  }
  if (logit_stats(student).std < kMinStd) {
    throw DegenerateLogits("student logits are constant");
  }
  const auto q_teacher = detail::boltzmann(teacher.values(), teacher_multiplier);
  const double target = detail::dot(student.values(), q_teacher);
  MaxEntSolution sol = solve_multiplier({student, target}, tol);
  for (std::size_t k = 0; k < student.size(); ++k) {
    const double form =
        std::exp(sol.multiplier * student[k] - sol.log_partition);
    if (std::abs(form - sol.distribution[k]) > 1e-10) {
      throw Error("solution is not of Boltzmann form exp(beta z) / Z");
    }
  }
  return sol;
}

}  // namespace zkd
