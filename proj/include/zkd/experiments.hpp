// SPDX-License-Identifier: Apache-2.0
//
// Runnable procedures: teacher training, the distillation loop, the
// shared-temperature shackle study, the toy-case comparison and per-sample
// logit statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "zkd/data.hpp"
#include "zkd/errors.hpp"
#include "zkd/logitcore.hpp"
#include "zkd/losses.hpp"
#include "zkd/nn.hpp"
#include "zkd/rng.hpp"

namespace zkd {

struct ConstantLr {};

/// lr * factor^(epoch / every).
struct StepDecay {
  double factor = 0.1;
  std::size_t every = 10;
};

using LrSchedule = std::variant<ConstantLr, StepDecay>;

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 0.05;
  LrSchedule lr_schedule = ConstantLr{};
  std::uint64_t seed = 0;
  double eps_guard = 1e-8;  // sigma floor, training paths only
  double momentum = 0.0;

  void validate() const {
    if (epochs < 1) throw InvalidParameter("epochs must be >= 1");
    if (batch_size < 1) throw InvalidParameter("batch_size must be >= 1");
    detail::require_positive(lr, "lr");
    if (!(eps_guard >= 0.0) || !std::isfinite(eps_guard)) {
      throw InvalidParameter("eps_guard must be >= 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw InvalidParameter("momentum must be in [0, 1)");
    }
    if (const auto* s = std::get_if<StepDecay>(&lr_schedule)) {
      detail::require_positive(s->factor, "lr decay factor");
      if (s->every < 1) throw InvalidParameter("lr decay interval must be >= 1");
    }
  }

  double lr_for_epoch(std::size_t epoch) const {
    if (const auto* s = std::get_if<StepDecay>(&lr_schedule)) {
      return lr * std::pow(s->factor, static_cast<double>(epoch / s->every));
    }
    return lr;
  }
};

/// Fraction of samples whose argmax logit equals the label.
inline double accuracy(const Mlp& net, const Dataset& data) {
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto logits = detail::forward_trace(net, data.row(n)).logits;
    if (argmax(std::span<const double>(logits)) == data.label(n)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace detail {

inline void check_net_matches(const MlpSpec& spec, const Dataset& data, const char* who) {
  if (spec.input_dim() != data.dim() || spec.output_dim() != data.num_classes()) {
    throw ShapeError(std::string(who) + " network is " +
                     std::to_string(spec.input_dim()) + " -> " +
                     std::to_string(spec.output_dim()) + " but data is D = " +
                     std::to_string(data.dim()) + ", K = " +
                     std::to_string(data.num_classes()));
  }
}

struct SampleResult {
  LossBreakdown loss;
  std::vector<double> d_logits;
};

/// Mini-batch SGD over `train`. Each epoch shuffles sample order with an Rng
/// seeded from cfg.seed; the batch gradient is the mean of per-sample
/// gradients. per_sample(n, student_logits) returns the loss and d loss/d
/// logits for sample n. Returns the mean loss of every epoch.
template <typename PerSample>
std::vector<LossBreakdown> run_sgd(Mlp& net, const Dataset& train, const TrainConfig& cfg,
                                   PerSample&& per_sample) {
  Rng rng(cfg.seed);
  std::optional<MomentumSgd> momentum;
  if (cfg.momentum > 0.0) momentum.emplace(net, cfg.momentum);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<LossBreakdown> history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const double lr = cfg.lr_for_epoch(epoch);
    LossBreakdown sum;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      MlpGradients grads = net.zero_gradients();
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t n = order[i];
        const ForwardTrace trace = forward_trace(net, train.row(n));
        const SampleResult r = per_sample(n, std::span<const double>(trace.logits));
        sum.ce_hard += r.loss.ce_hard;
        sum.kd += r.loss.kd;
        sum.total += r.loss.total;
        accumulate_backward(net, trace, r.d_logits, grads);
      }
      grads.scale(1.0 / static_cast<double>(stop - start));
      if (momentum) {
        momentum->step(net, grads, lr);
      } else {
        sgd_step(net, grads, lr);
      }
    }
    const double count = static_cast<double>(train.size());
    history.push_back({sum.ce_hard / count, sum.kd / count, sum.total / count});
    for (const auto& layer : net.layers()) {
      for (double w : layer.w) {
        if (!std::isfinite(w)) throw Error("training diverged (non-finite weight)");
      }
    }
  }
  return history;
}

inline SampleResult hard_label_ce(std::span<const double> logits, std::size_t label) {
  SampleResult r;
  r.d_logits = softmax(logits, 1.0);
  r.loss.ce_hard = hard_cross_entropy(logits, label);
  r.loss.total = r.loss.ce_hard;
  r.d_logits[label] -= 1.0;
  return r;
}

}  // namespace detail

struct TrainResult {
  Mlp net;
  double test_accuracy = 0.0;
  std::vector<LossBreakdown> epoch_losses;  // ce_hard == total, kd == 0
};

/// Hard-label cross-entropy training from init(spec).
inline TrainResult train_teacher(const Split& data, const MlpSpec& spec,
                                 const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  detail::check_net_matches(spec, data.train, "teacher");
  Mlp net = init(spec);
  auto history = detail::run_sgd(net, data.train, cfg, [&](std::size_t n, std::span<const double> z) {
    return detail::hard_label_ce(z, data.train.label(n));
  });
  const double acc = accuracy(net, data.test);
  return {std::move(net), acc, std::move(history)};
}

struct DistillReport {
  double teacher_acc = 0.0;
  double student_acc = 0.0;
  LossBreakdown initial_loss{};  // train-set mean before any update
  std::vector<LossBreakdown> epoch_losses{};  // one per epoch
  KDConfig kd;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::vector<LogitStats> teacher_stats{};  // per test sample
  std::vector<LogitStats> student_stats{};
  Mlp student;
};

/// Distills a frozen teacher into `student` by minimizing, per sample,
///   lambda_ce CE(y, softmax(z)) + lambda_kd tau^2 KL(q(v) || q(z)).
/// Under the Z-score scheme sigma is floored at cfg.eps_guard.
inline DistillReport distill(const Mlp& teacher, const Split& data, Mlp student,
                             const KDConfig& kd, const TrainConfig& cfg) {
  kd.validate();
  cfg.validate();
  detail::check_net_matches(teacher.spec(), data.train, "teacher");
  detail::check_net_matches(student.spec(), data.train, "student");
  if (is_zscore(kd) && !(cfg.eps_guard > 0.0)) {
    throw InvalidParameter("Z-score distillation requires eps_guard > 0");
  }
  const Dataset& train = data.train;
  std::vector<std::vector<double>> teacher_logits(train.size());
  for (std::size_t n = 0; n < train.size(); ++n) {
    teacher_logits[n] = detail::forward_trace(teacher, train.row(n)).logits;
  }
  auto per_sample = [&](std::size_t n, std::span<const double> z) {
    auto ev = detail::evaluate_kd(teacher_logits[n], z, train.label(n), kd,
                                  cfg.eps_guard, true);
    return detail::SampleResult{ev.loss, std::move(ev.grad)};
  };

  DistillReport report{.kd = kd, .train = cfg, .seed = cfg.seed, .student = student};
  for (std::size_t n = 0; n < train.size(); ++n) {
    const auto z = detail::forward_trace(student, train.row(n)).logits;
    const auto ev = detail::evaluate_kd(teacher_logits[n], z, train.label(n), kd,
                                        cfg.eps_guard, false);
    report.initial_loss.ce_hard += ev.loss.ce_hard;
    report.initial_loss.kd += ev.loss.kd;
    report.initial_loss.total += ev.loss.total;
  }
  const double count = static_cast<double>(train.size());
  report.initial_loss.ce_hard /= count;
  report.initial_loss.kd /= count;
  report.initial_loss.total /= count;

  report.epoch_losses = detail::run_sgd(student, train, cfg, per_sample);
  report.teacher_acc = accuracy(teacher, data.test);
  report.student_acc = accuracy(student, data.test);
  for (std::size_t n = 0; n < data.test.size(); ++n) {
    report.teacher_stats.push_back(
        detail::stats(detail::forward_trace(teacher, data.test.row(n)).logits));
    report.student_stats.push_back(
        detail::stats(detail::forward_trace(student, data.test.row(n)).logits));
  }
  report.student = std::move(student);
  return report;
}

/// Student starts from init(student_spec).
inline DistillReport distill(const Mlp& teacher, const Split& data,
                             const MlpSpec& student_spec, const KDConfig& kd,
                             const TrainConfig& cfg) {
  return distill(teacher, data, init(student_spec), kd, cfg);
}

// ---------------------------------------------------------------------------
// Shared-temperature shackles

struct ShackleReport {
  std::vector<double> teacher_logits;
  std::vector<double> converged_student_logits;
  double temperature = 0.0;
  double delta = 0.0;               // mean(z) - mean(v)
  double max_shift_residual = 0.0;  // max_i |z_i - v_i - delta|
  double std_ratio = 0.0;           // std(z) / std(v)
  std::size_t iterations = 0;
  double final_kl = 0.0;
  double max_mean_drift = 0.0;  // max over iterations of |mean(z_t) - mean(z_0)|
};

struct ShackleOptions {
  std::optional<double> lr;  // default 0.5 T^2
  std::size_t max_iters = 1'000'000;
  double tol = 1e-8;  // on the gradient's infinity norm
};

/// Gradient descent on the student logits z to minimize
/// KL(softmax(v / T) || softmax(z / T)).
inline ShackleReport shackle_study(const LogitVector& teacher, double T,
                                   const LogitVector& init, ShackleOptions opts = {}) {
  detail::require_positive(T, "T");
  detail::require_positive(opts.tol, "tol");
  if (teacher.size() != init.size()) throw ShapeError("teacher and init differ in length");
  const double lr = opts.lr.value_or(0.5 * T * T);
  detail::require_positive(lr, "lr");

  const std::size_t K = teacher.size();
  const std::vector<double> p = detail::softmax(teacher.values(), T);
  std::vector<double> z = init.vec();
  const double mean0 = detail::mean(z);
  double drift = 0.0;
  std::vector<double> q(K);
  for (std::size_t it = 0;; ++it) {
    detail::softmax(z, T, q);
    double gmax = 0.0;
    for (std::size_t k = 0; k < K; ++k) gmax = std::max(gmax, std::abs(q[k] - p[k]) / T);
    if (gmax <= opts.tol) {
      ShackleReport r;
      r.teacher_logits = teacher.vec();
      r.temperature = T;
      r.iterations = it;
      const LogitStats zs = detail::stats(z);
      const LogitStats vs = detail::stats(teacher.values());
      r.delta = zs.mean - vs.mean;
      for (std::size_t k = 0; k < K; ++k) {
        r.max_shift_residual =
            std::max(r.max_shift_residual, std::abs(z[k] - teacher[k] - r.delta));
      }
      r.std_ratio = vs.std > 0.0 ? zs.std / vs.std : std::nan("");
      r.final_kl = detail::kl_div(p, q);
      r.max_mean_drift = drift;
      r.converged_student_logits = std::move(z);
      return r;
    }
    if (it == opts.max_iters) {
      throw ConvergenceError("shackle study did not converge in " +
                                 std::to_string(opts.max_iters) + " iterations",
                             std::move(z), it);
    }
    for (std::size_t k = 0; k < K; ++k) z[k] -= lr * (q[k] - p[k]) / T;
    drift = std::max(drift, std::abs(detail::mean(z) - mean0));
  }
}

// ---------------------------------------------------------------------------
// Toy case

struct ToyCaseRow {
  std::vector<double> logits;
  double vanilla_kl = 0.0;  // KL(softmax(v / tau) || softmax(z / tau))
  double zscore_kl = 0.0;   // KL(softmax(Z(v; tau)) || softmax(Z(z; tau)))
  std::size_t predicted = 0;
  std::optional<bool> correct;  // set when a label is given
};

struct ToyCaseReport {
  std::vector<double> teacher_logits;
  double tau = 0.0;
  std::optional<std::size_t> label;
  std::vector<ToyCaseRow> rows;
  std::vector<std::size_t> vanilla_ranking;  // student indices, best first
  std::vector<std::size_t> zscore_ranking;
  std::size_t vanilla_preferred() const { return vanilla_ranking.front(); }
  std::size_t zscore_preferred() const { return zscore_ranking.front(); }
};

inline ToyCaseReport toy_case(const LogitVector& teacher,
                              const std::vector<LogitVector>& students, double tau,
                              std::optional<std::size_t> label = std::nullopt) {
  detail::require_positive(tau, "tau");
  if (students.empty()) throw InvalidParameter("toy case needs at least one student");
  if (label && *label >= teacher.size()) throw InvalidParameter("label outside [0, K)");
  ToyCaseReport rep{teacher.vec(), tau, label, {}, {}, {}};
  const ProbabilityVector pv = softmax_t(teacher, tau);
  const ProbabilityVector pz = softmax(zscore(teacher, tau));
  for (const auto& s : students) {
    if (s.size() != teacher.size()) throw ShapeError("student and teacher differ in length");
    ToyCaseRow row;
    row.logits = s.vec();
    row.vanilla_kl = kl_div(pv, softmax_t(s, tau));
    row.zscore_kl = kl_div(pz, softmax(zscore(s, tau)));
    row.predicted = argmax(s);
    if (label) row.correct = row.predicted == *label;
    rep.rows.push_back(std::move(row));
  }
  auto rank_by = [&](double ToyCaseRow::*field) {
    std::vector<std::size_t> idx(rep.rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return rep.rows[a].*field < rep.rows[b].*field;
    });
    return idx;
  };
  rep.vanilla_ranking = rank_by(&ToyCaseRow::vanilla_kl);
  rep.zscore_ranking = rank_by(&ToyCaseRow::zscore_kl);
  return rep;
}

// ---------------------------------------------------------------------------
// Logit statistics

struct LogitStatistics {
  std::vector<LogitStats> per_sample;
  double mean_of_means = 0.0;
  double mean_of_stds = 0.0;
};

inline LogitStatistics summarize(std::vector<LogitStats> per_sample) {
  LogitStatistics s;
  for (const auto& st : per_sample) {
    s.mean_of_means += st.mean;
    s.mean_of_stds += st.std;
  }
  if (!per_sample.empty()) {
    s.mean_of_means /= static_cast<double>(per_sample.size());
    s.mean_of_stds /= static_cast<double>(per_sample.size());
  }
  s.per_sample = std::move(per_sample);
  return s;
}

/// Mean and population std of the network's logits for every sample.
inline LogitStatistics logit_statistics(const Mlp& net, const Dataset& data) {
  if (net.input_dim() != data.dim()) {
    throw ShapeError("network input dimension does not match the data");
  }
  std::vector<LogitStats> per_sample;
  per_sample.reserve(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    per_sample.push_back(detail::stats(detail::forward_trace(net, data.row(n)).logits));
  }
  return summarize(std::move(per_sample));
}

}  // namespace zkd
