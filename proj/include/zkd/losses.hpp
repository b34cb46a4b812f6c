// SPDX-License-Identifier: Apache-2.0
//
// KL divergence, cross-entropy and the combined distillation objective
//   lambda_ce * CE(onehot(y), softmax(z)) + lambda_kd * tau^2 * KL(q(v) || q(z))
// where q is either a shared-temperature softmax or the softmax of Z-score
// standardized logits. Gradients are with respect to the student logits z.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "zkd/errors.hpp"
#include "zkd/logitcore.hpp"

namespace zkd {

/// Teacher and student share one fixed temperature T.
struct SharedConstant {
  double T = 2.0;
};

/// Each side is Z-score standardized with base temperature tau.
struct ZScore {};

using TemperatureScheme = std::variant<SharedConstant, ZScore>;

struct KDConfig {
  double lambda_ce = 1.0;
  double lambda_kd = 9.0;
  double tau = 2.0;
  TemperatureScheme scheme = ZScore{};

  void validate() const {
    if (!(lambda_ce >= 0.0) || !std::isfinite(lambda_ce)) {
      throw InvalidParameter("lambda_ce must be >= 0");
    }
    if (!(lambda_kd >= 0.0) || !std::isfinite(lambda_kd)) {
      throw InvalidParameter("lambda_kd must be >= 0");
    }
    if (!(lambda_ce + lambda_kd > 0.0)) {
      throw InvalidParameter("lambda_ce + lambda_kd must be > 0");
    }
    detail::require_positive(tau, "tau");
    if (const auto* s = std::get_if<SharedConstant>(&scheme)) {
      detail::require_positive(s->T, "shared temperature T");
    }
  }
};

inline bool is_zscore(const KDConfig& cfg) noexcept {
  return std::holds_alternative<ZScore>(cfg.scheme);
}

inline std::string scheme_name(const TemperatureScheme& s) {
  return std::holds_alternative<ZScore>(s) ? "zscore" : "shared_constant";
}

/// total == lambda_ce * ce_hard + lambda_kd * tau^2 * kd.
struct LossBreakdown {
  double ce_hard = 0.0;
  double kd = 0.0;
  double total = 0.0;
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError("size mismatch: " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

inline double kl_div(std::span<const double> p, std::span<const double> q) {
  require_same_size(p.size(), q.size());
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) {
      throw InfiniteDivergence("q(" + std::to_string(k) + ") = 0 where p > 0");
    }
    d += p[k] * std::log(p[k] / q[k]);
  }
  // Gibbs: the true value is >= 0; only rounding can push it below.
  return d > 0.0 ? d : 0.0;
}

inline double cross_entropy(std::span<const double> p, std::span<const double> q) {
  require_same_size(p.size(), q.size());
  double h = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) {
      throw InfiniteDivergence("q(" + std::to_string(k) + ") = 0 where p > 0");
    }
    h -= p[k] * std::log(q[k]);
  }
  return h;
}

/// -log softmax(z)[label], accurate when the label's probability is near 1.
inline double hard_cross_entropy(std::span<const double> z, std::size_t label) noexcept {
  const auto top = std::max_element(z.begin(), z.end());
  double rest = 0.0;
  for (auto it = z.begin(); it != z.end(); ++it) {
    if (it != top) rest += std::exp(*it - *top);
  }
  return (*top - z[label]) + std::log1p(rest);
}

/// Scheme-specific view of one logit vector: its distribution and, for the
/// Z-score scheme, the standardized logits and the scale sigma * tau.
struct SchemeView {
  std::vector<double> probs;
  std::vector<double> standardized;
  double scale = 1.0;
  bool sigma_clamped = false;
};

/// sigma_floor == 0 selects the strict path (DegenerateLogits below kMinStd);
/// sigma_floor > 0 substitutes max(sigma, sigma_floor) for sigma.
inline SchemeView scheme_view(std::span<const double> logits, const KDConfig& cfg,
                              double sigma_floor) {
  SchemeView view;
  if (const auto* s = std::get_if<SharedConstant>(&cfg.scheme)) {
    view.probs = softmax(logits, s->T);
    view.scale = s->T;
    return view;
  }
  const LogitStats st = stats(logits);
  double sigma = st.std;
  if (sigma_floor > 0.0) {
    if (sigma < sigma_floor) {
      sigma = sigma_floor;
      view.sigma_clamped = true;
    }
  } else if (sigma < kMinStd) {
    throw DegenerateLogits("cannot standardize logits with std " +
                           std::to_string(sigma));
  }
  view.scale = sigma * cfg.tau;
  view.standardized.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    view.standardized[k] = (logits[k] - st.mean) / view.scale;
  }
  view.probs = softmax(view.standardized, 1.0);
  return view;
}

struct Evaluation {
  LossBreakdown loss;
  std::vector<double> grad;
};

/// Loss and (optionally) its gradient with respect to the student logits.
inline Evaluation evaluate_kd(std::span<const double> teacher,
                              std::span<const double> student, std::size_t label,
                              const KDConfig& cfg, double sigma_floor,
                              bool with_grad) {
  require_same_size(teacher.size(), student.size());
  const std::size_t K = student.size();
  if (label >= K) {
    throw InvalidParameter("label " + std::to_string(label) + " outside [0, " +
                           std::to_string(K) + ")");
  }
  Evaluation ev;
  const std::vector<double> q_plain = softmax(student, 1.0);
  ev.loss.ce_hard = hard_cross_entropy(student, label);

  const SchemeView tv = scheme_view(teacher, cfg, sigma_floor);
  const SchemeView sv = scheme_view(student, cfg, sigma_floor);
  ev.loss.kd = kl_div(tv.probs, sv.probs);
  const double kd_weight = cfg.lambda_kd * cfg.tau * cfg.tau;
  ev.loss.total = cfg.lambda_ce * ev.loss.ce_hard + kd_weight * ev.loss.kd;
  if (!with_grad) return ev;

  // d KL / d (scheme input) = q_student - q_teacher.
  std::vector<double> g(K);
  for (std::size_t k = 0; k < K; ++k) g[k] = sv.probs[k] - tv.probs[k];

  std::vector<double> kd_grad(K);
  if (std::holds_alternative<SharedConstant>(cfg.scheme) || sv.sigma_clamped) {
    // Shared: inputs are z / T. Clamped sigma: only the mean depends on z,
    // and g already sums to zero.
    for (std::size_t k = 0; k < K; ++k) kd_grad[k] = g[k] / sv.scale;
  } else {
    // J = (I - 11^T/K - zhat zhat^T tau^2 / K) / (sigma tau), symmetric.
    double g_mean = 0.0;
    double zg = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      g_mean += g[k];
      zg += sv.standardized[k] * g[k];
    }
    g_mean /= static_cast<double>(K);
    const double coef = cfg.tau * cfg.tau * zg / static_cast<double>(K);
    for (std::size_t k = 0; k < K; ++k) {
      kd_grad[k] = (g[k] - g_mean - coef * sv.standardized[k]) / sv.scale;
    }
  }

  ev.grad.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double ce_grad = q_plain[k] - (k == label ? 1.0 : 0.0);
    ev.grad[k] = cfg.lambda_ce * ce_grad + kd_weight * kd_grad[k];
  }
  return ev;
}

}  // namespace detail

/// sum_k p(k) log(p(k) / q(k)) with 0 log 0 = 0.
inline double kl_div(const ProbabilityVector& p, const ProbabilityVector& q) {
  return detail::kl_div(p.values(), q.values());
}

/// -sum_k p(k) log q(k). Equals kl_div(p, q) + entropy(p).
inline double cross_entropy(const ProbabilityVector& p, const ProbabilityVector& q) {
  return detail::cross_entropy(p.values(), q.values());
}

/// Gradient of KL(p || softmax(z / T)) with respect to z.
inline std::vector<double> kl_div_grad_logits(const ProbabilityVector& p,
                                              const LogitVector& z, double T) {
  detail::require_same_size(p.size(), z.size());
  const ProbabilityVector q = softmax_t(z, T);
  // KL = sum p log p - sum p log q; the first sum does not depend on z.
  std::vector<double> g(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    double d_neg_plogq = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      // d log q_k / d z_j = (delta_kj - q_j) / T
      d_neg_plogq -= p[k] * ((k == j ? 1.0 : 0.0) - q[j]) / T;
    }
    g[j] = d_neg_plogq;
  }
  return g;
}

/// Gradient of CE(p, softmax(z / T)) with respect to z: (q sum(p) - p) / T.
inline std::vector<double> cross_entropy_grad_logits(const ProbabilityVector& p,
                                                     const LogitVector& z, double T) {
  detail::require_same_size(p.size(), z.size());
  const ProbabilityVector q = softmax_t(z, T);
  double psum = 0.0;
  for (double x : p) psum += x;
  std::vector<double> g(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) g[j] = (q[j] * psum - p[j]) / T;
  return g;
}

/// Teacher/student distributions under the configured scheme (strict sigma).
inline ProbabilityVector scheme_probs(const LogitVector& logits, const KDConfig& cfg) {
  return ProbabilityVector(detail::scheme_view(logits.values(), cfg, 0.0).probs);
}

inline LossBreakdown kd_objective(const LogitVector& teacher_logits,
                                  const LogitVector& student_logits,
                                  std::size_t label, const KDConfig& cfg) {
  cfg.validate();
  return detail::evaluate_kd(teacher_logits.values(), student_logits.values(),
                             label, cfg, 0.0, false)
      .loss;
}

/// d total / d student_logits.
inline std::vector<double> kd_objective_grad(const LogitVector& teacher_logits,
                                             const LogitVector& student_logits,
                                             std::size_t label, const KDConfig& cfg) {
  cfg.validate();
  return detail::evaluate_kd(teacher_logits.values(), student_logits.values(),
                             label, cfg, 0.0, true)
      .grad;
}

}  // namespace zkd
