// SPDX-License-Identifier: Apache-2.0
//
// Logit statistics, temperature softmax, the shift/scale softmax family and
// Z-score logit standardization. Everything here is a pure function in double
// precision.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zkd/errors.hpp"

namespace zkd {

/// Spread below which a logit vector is treated as constant.
inline constexpr double kMinStd = 1e-12;

/// Raw pre-softmax scores for one sample. At least two classes, all finite.
class LogitVector {
 public:
  explicit LogitVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
      throw InvalidParameter("logit vector needs at least 2 classes, got " +
                             std::to_string(values_.size()));
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        throw InvalidParameter("logit " + std::to_string(k) + " is not finite");
      }
    }
  }
  LogitVector(std::initializer_list<double> values)
      : LogitVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

 private:
  std::vector<double> values_;
};

/// Nonnegative entries summing to one.
class ProbabilityVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit ProbabilityVector(std::vector<double> values)
      : values_(std::move(values)) {
    if (values_.empty()) throw InvalidParameter("empty probability vector");
    double sum = 0.0;
    for (double p : values_) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidParameter("probability entry outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw InvalidParameter("probabilities do not sum to 1");
    }
  }
  ProbabilityVector(std::initializer_list<double> values)
      : ProbabilityVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

 private:
  std::vector<double> values_;
};

/// Population mean and standard deviation (divisor K).
struct LogitStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Output of zscore(): zero mean, population std 1/tau.
class StandardizedLogits {
 public:
  StandardizedLogits(std::vector<double> values, double tau)
      : values_(std::move(values)), tau_(tau) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }
  double tau() const noexcept { return tau_; }

 private:
  std::vector<double> values_;
  double tau_;
};

/// Shift a and scale b > 0 of the generalized softmax exp((z - a) / b).
struct SoftmaxParams {
  double a = 0.0;
  double b = 1.0;
};

namespace detail {

inline double mean(std::span<const double> z) noexcept {
  return std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
}

inline LogitStats stats(std::span<const double> z) noexcept {
  const double m = mean(z);
  double ss = 0.0;
  for (double x : z) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(z.size()))};
}

/// softmax(z / temperature) written into out; max-subtracted so exp() <= 1.
inline void softmax(std::span<const double> z, double temperature,
                    std::span<double> out) noexcept {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = std::exp((z[k] - zmax) / temperature);
    sum += out[k];
  }
  for (std::size_t k = 0; k < z.size(); ++k) out[k] /= sum;
}

inline std::vector<double> softmax(std::span<const double> z, double temperature) {
  std::vector<double> out(z.size());
  softmax(z, temperature, out);
  return out;
}

inline void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidParameter(std::string(name) + " must be a positive finite number");
  }
}

}  // namespace detail

inline LogitStats logit_stats(const LogitVector& z) noexcept {
  return detail::stats(z.values());
}

/// softmax(z / temperature).
inline ProbabilityVector softmax_t(const LogitVector& z, double temperature) {
  detail::require_positive(temperature, "temperature");
  return ProbabilityVector(detail::softmax(z.values(), temperature));
}

/// softmax((z - a) / b). The shift a cancels, so this equals softmax_t(z, b).
inline ProbabilityVector general_softmax(const LogitVector& z, SoftmaxParams p) {
  detail::require_positive(p.b, "softmax scale b");
  if (!std::isfinite(p.a)) throw InvalidParameter("softmax shift a must be finite");
  std::vector<double> shifted(z.size());
  std::transform(z.begin(), z.end(), shifted.begin(),
                 [&](double x) { return x - p.a; });
  return ProbabilityVector(detail::softmax(shifted, p.b));
}

/// (z - mean(z)) / (std(z) * tau). Throws DegenerateLogits when
/// std(z) < kMinStd.
inline StandardizedLogits zscore(const LogitVector& z, double tau) {
  detail::require_positive(tau, "tau");
  const LogitStats s = logit_stats(z);
  if (s.std < kMinStd) {
    throw DegenerateLogits("cannot standardize logits with std " +
                           std::to_string(s.std));
  }
  std::vector<double> out(z.size());
  const double scale = s.std * tau;
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = (z[k] - s.mean) / scale;
  return StandardizedLogits(std::move(out), tau);
}

/// Softmax of standardized logits (temperature already folded in by tau).
inline ProbabilityVector softmax(const StandardizedLogits& zs) {
  return ProbabilityVector(detail::softmax(zs.values(), 1.0));
}

/// Index of the largest entry; the lowest index wins ties.
inline std::size_t argmax(std::span<const double> z) noexcept {
  return static_cast<std::size_t>(
      std::distance(z.begin(), std::max_element(z.begin(), z.end())));
}

inline std::size_t argmax(const LogitVector& z) noexcept { return argmax(z.values()); }

/// Shannon entropy in nats, with 0 log 0 = 0.
inline double entropy(const ProbabilityVector& p) noexcept {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

}  // namespace zkd
