// SPDX-License-Identifier: Apache-2.0
//
// Randomized property suite over the logit-core and loss invariants. Each
// property draws its cases from its own Rng stream keyed by (seed, property
// index), so results depend only on (cases, seed).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "zkd/io.hpp"
#include "zkd/logitcore.hpp"
#include "zkd/losses.hpp"
#include "zkd/rng.hpp"

namespace zkd::props {

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::size_t cases = 0;
  double worst = 0.0;          // largest observed violation measure
  std::string counterexample;  // first failing input, empty if passed
};

struct Options {
  std::size_t cases = 1000;
  std::uint64_t seed = 0;
};

/// Standardization under test; returns the standardized values.
using StandardizeFn = std::function<std::vector<double>(const LogitVector&, double)>;

inline std::vector<double> default_standardize(const LogitVector& z, double tau) {
  return zscore(z, tau).vec();
}

// Generators --------------------------------------------------------------

inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

/// offset + scale * N(0, 1) entries, scale log-uniform in [0.1, 10].
inline LogitVector random_logits(Rng& rng, std::size_t K) {
  const double scale = log_uniform(rng, 0.1, 10.0);
  const double offset = rng.uniform(-5.0, 5.0);
  std::vector<double> z(K);
  for (double& x : z) x = offset + scale * rng.normal();
  return LogitVector(std::move(z));
}

inline std::size_t random_k(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

inline std::string describe(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += io::format_double(v[i]);
  }
  return s + "]";
}

inline std::vector<std::size_t> argsort(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Central finite differences of f at z.
template <typename F>
std::vector<double> finite_difference(F&& f, std::vector<double> z, double h = 1e-5) {
  std::vector<double> g(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double orig = z[k];
    z[k] = orig + h;
    const double up = f(z);
    z[k] = orig - h;
    const double down = f(z);
    z[k] = orig;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b||_2 / max(||a||_2, ||b||_2, 1e-12).
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

// Runner --------------------------------------------------------------------

namespace detail {

/// check(rng, worst, witness) returns false on violation, updating worst with
/// the violation measure and witness with a description of the input.
template <typename Check>
PropertyResult run_property(std::string name, std::size_t cases, std::uint64_t seed,
                            Check&& check) {
  PropertyResult r;
  r.name = std::move(name);
  Rng rng(seed);
  for (std::size_t i = 0; i < cases; ++i) {
    double measure = 0.0;
    std::string witness;
    bool ok = false;
    try {
      ok = check(rng, measure, witness);
    } catch (const std::exception& e) {
      ok = false;
      witness += std::string(" threw: ") + e.what();
    }
    r.worst = std::max(r.worst, measure);
    ++r.cases;
    if (!ok) {
      r.passed = false;
      r.counterexample = "case " + std::to_string(i) + ": " + witness;
      break;
    }
  }
  return r;
}

}  // namespace detail

inline std::vector<PropertyResult> run_property_suite(
    const Options& opts, const StandardizeFn& standardize = default_standardize) {
  std::vector<PropertyResult> results;
  std::uint64_t stream = 0;
  auto add = [&](std::string name, auto&& check) {
    results.push_back(detail::run_property(std::move(name), opts.cases,
                                           opts.seed * 1000003ULL + stream++, check));
  };

  // Draws (z, tau) with K in [2, 100] and tau log-uniform in [0.25, 10].
  auto draw = [](Rng& rng, std::string& witness) {
    const std::size_t K = random_k(rng, 2, 100);
    LogitVector z = random_logits(rng, K);
    const double tau = log_uniform(rng, 0.25, 10.0);
    witness = "K=" + std::to_string(K) + " tau=" + io::format_double(tau) +
              " z=" + describe(z.vec());
    return std::pair{std::move(z), tau};
  };

  add("zscore.zero_mean", [&](Rng& rng, double& m, std::string& w) {
    auto [z, tau] = draw(rng, w);
    m = std::abs(zkd::detail::mean(standardize(z, tau)));
    return m < 1e-9;
  });
  add("zscore.std_equals_inverse_tau", [&](Rng& rng, double& m, std::string& w) {
    auto [z, tau] = draw(rng, w);
    m = std::abs(zkd::detail::stats(standardize(z, tau)).std - 1.0 / tau);
    return m < 1e-9;
  });
  add("zscore.bounded_by_sqrt_k_minus_1_over_tau", [&](Rng& rng, double& m, std::string& w) {
    auto [z, tau] = draw(rng, w);
    const auto zs = standardize(z, tau);
    double mx = 0.0;
    for (double x : zs) mx = std::max(mx, std::abs(x));
    const double bound = std::sqrt(static_cast<double>(z.size() - 1)) / tau;
    m = std::max(0.0, mx - bound);
    return mx <= bound + 1e-12;
  });
  add("zscore.rank_preserved", [&](Rng& rng, double& m, std::string& w) {
    auto [z, tau] = draw(rng, w);
    const auto zs = standardize(z, tau);
    const bool ok = argsort(zs) == argsort(z.values());
    m = ok ? 0.0 : 1.0;
    return ok;
  });
  add("zscore.positive_affine_invariant", [&](Rng& rng, double& m, std::string& w) {
    auto [z, tau] = draw(rng, w);
    const double a = log_uniform(rng, 0.1, 10.0);
    const double b = rng.uniform(-10.0, 10.0);
    w += " a=" + io::format_double(a) + " b=" + io::format_double(b);
    std::vector<double> t(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) t[k] = a * z[k] + b;
    m = max_abs_diff(standardize(LogitVector(t), tau), standardize(z, tau));
    return m < 1e-9;
  });
  add("softmax.shift_invariant", [&](Rng& rng, double& m, std::string& w) {
    auto [z, T] = draw(rng, w);
    const double c = rng.uniform(-50.0, 50.0);
    w += " c=" + io::format_double(c);
    std::vector<double> t(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) t[k] = z[k] + c;
    m = max_abs_diff(softmax_t(LogitVector(t), T).values(), softmax_t(z, T).values());
    return m < 1e-12;
  });
  add("general_softmax.equals_softmax_t", [&](Rng& rng, double& m, std::string& w) {
    auto [z, b] = draw(rng, w);
    const double a = rng.uniform(-20.0, 20.0);
    w += " a=" + io::format_double(a);
    m = max_abs_diff(general_softmax(z, {a, b}).values(), softmax_t(z, b).values());
    return m < 1e-12;
  });
  add("softmax.is_probability_vector", [&](Rng& rng, double& m, std::string& w) {
    auto [z, T] = draw(rng, w);
    const auto p = zkd::detail::softmax(z.values(), T);
    double sum = 0.0;
    bool in_range = true;
    for (double x : p) {
      sum += x;
      in_range = in_range && x >= 0.0 && x <= 1.0;
    }
    m = std::abs(sum - 1.0);
    return in_range && m <= ProbabilityVector::kSumTolerance;
  });

  // Loss properties use a teacher/student pair of equal length.
  auto draw_pair = [](Rng& rng, std::string& witness, std::size_t kmax) {
    const std::size_t K = random_k(rng, 2, kmax);
    LogitVector v = random_logits(rng, K);
    LogitVector z = random_logits(rng, K);
    const double T = log_uniform(rng, 0.25, 10.0);
    witness = "K=" + std::to_string(K) + " T=" + io::format_double(T) +
              " v=" + describe(v.vec()) + " z=" + describe(z.vec());
    return std::tuple{std::move(v), std::move(z), T};
  };

  add("losses.ce_minus_kl_equals_entropy", [&](Rng& rng, double& m, std::string& w) {
    auto [v, z, T] = draw_pair(rng, w, 100);
    const auto p = softmax_t(v, T);
    const auto q = softmax_t(z, T);
    m = std::abs(cross_entropy(p, q) - kl_div(p, q) - entropy(p));
    return m < 1e-9;
  });
  add("losses.kl_nonnegative", [&](Rng& rng, double& m, std::string& w) {
    auto [v, z, T] = draw_pair(rng, w, 100);
    const double d = kl_div(softmax_t(v, T), softmax_t(z, T));
    m = std::max(0.0, -d);
    return d >= 0.0;
  });
  add("losses.kl_grad_equals_ce_grad", [&](Rng& rng, double& m, std::string& w) {
    auto [v, z, T] = draw_pair(rng, w, 100);
    const auto p = softmax_t(v, T);
    m = max_abs_diff(kl_div_grad_logits(p, z, T), cross_entropy_grad_logits(p, z, T));
    return m <= 1e-12;
  });
  add("losses.shared_kd_grad_sums_to_zero", [&](Rng& rng, double& m, std::string& w) {
    auto [v, z, T] = draw_pair(rng, w, 100);
    const KDConfig cfg{0.0, 1.0, T, SharedConstant{T}};
    const auto g = kd_objective_grad(v, z, 0, cfg);
    m = std::abs(std::accumulate(g.begin(), g.end(), 0.0));
    return m < 1e-12;
  });
  // Finite differences resolve a gradient only down to about eps * |loss| / h,
  // so this check draws moderate logits (scale <= 3, K >= 3) and keeps the CE
  // weight away from zero; with K = 2 the Z-score KD gradient vanishes.
  add("losses.kd_grad_matches_finite_differences", [&](Rng& rng, double& m, std::string& w) {
    const std::size_t K = random_k(rng, 3, 20);
    const auto moderate = [&] {
      const double scale = log_uniform(rng, 0.3, 3.0);
      const double offset = rng.uniform(-5.0, 5.0);
      std::vector<double> x(K);
      for (double& e : x) e = offset + scale * rng.normal();
      return LogitVector(std::move(x));
    };
    const LogitVector v = moderate();
    const LogitVector z = moderate();
    const double T = log_uniform(rng, 0.5, 8.0);
    w = "K=" + std::to_string(K) + " T=" + io::format_double(T) + " v=" + describe(v.vec()) +
        " z=" + describe(z.vec());
    const std::size_t label = static_cast<std::size_t>(rng.below(K));
    const bool zs = rng.below(2) == 1;
    const KDConfig cfg{rng.uniform(0.5, 2.0), rng.uniform(0.5, 10.0),
                       log_uniform(rng, 0.5, 8.0),
                       zs ? TemperatureScheme{ZScore{}} : TemperatureScheme{SharedConstant{T}}};
    w += " label=" + std::to_string(label) + " scheme=" + scheme_name(cfg.scheme);
    const auto analytic = kd_objective_grad(v, z, label, cfg);
    const auto fd = finite_difference(
        [&](const std::vector<double>& x) {
          return kd_objective(v, LogitVector(x), label, cfg).total;
        },
        z.vec());
    m = relative_error(analytic, fd);
    return m < 1e-5;
  });
  return results;
}

inline bool all_passed(const std::vector<PropertyResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const PropertyResult& r) { return r.passed; });
}

}  // namespace zkd::props
