// SPDX-License-Identifier: Apache-2.0
//
// JSON and CSV renderings of configs and experiment reports.
#pragma once

#include <string>
#include <variant>
#include <vector>

#include "zkd/data.hpp"
#include "zkd/experiments.hpp"
#include "zkd/io.hpp"
#include "zkd/losses.hpp"
#include "zkd/nn.hpp"
#include "zkd/props.hpp"

namespace zkd::report {

using io::Json;

inline Json to_json(const LossBreakdown& l) {
  return {{"ce_hard", l.ce_hard}, {"kd", l.kd}, {"total", l.total}};
}

inline Json to_json(const LogitStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

inline Json to_json(const DataSpec& d) {
  return {{"generator", to_string(d.generator)},
          {"K", d.K},
          {"D", d.D},
          {"N", d.N},
          {"class_separation", d.class_separation},
          {"noise_std", d.noise_std},
          {"seed", d.seed}};
}

inline Json to_json(const KDConfig& kd) {
  Json j = {{"lambda_ce", kd.lambda_ce},
            {"lambda_kd", kd.lambda_kd},
            {"tau", kd.tau},
            {"scheme", scheme_name(kd.scheme)}};
  if (const auto* s = std::get_if<SharedConstant>(&kd.scheme)) j["T"] = s->T;
  return j;
}

inline Json to_json(const TrainConfig& c) {
  Json schedule = {{"type", "constant"}};
  if (const auto* s = std::get_if<StepDecay>(&c.lr_schedule)) {
    schedule = {{"type", "step_decay"}, {"factor", s->factor}, {"every", s->every}};
  }
  return {{"epochs", c.epochs},     {"batch_size", c.batch_size},
          {"lr", c.lr},             {"lr_schedule", schedule},
          {"seed", c.seed},         {"eps_guard", c.eps_guard},
          {"momentum", c.momentum}};
}

inline Json losses_to_json(const std::vector<LossBreakdown>& series) {
  Json arr = Json::array();
  for (const auto& l : series) arr.push_back(to_json(l));
  return arr;
}

inline Json summary_to_json(const LogitStatistics& s) {
  return {{"mean_of_means", s.mean_of_means}, {"mean_of_stds", s.mean_of_stds}};
}

inline Json to_json(const DistillReport& r) {
  return {{"scheme", scheme_name(r.kd.scheme)},
          {"seed", r.seed},
          {"kd", to_json(r.kd)},
          {"train", to_json(r.train)},
          {"teacher_acc", r.teacher_acc},
          {"student_acc", r.student_acc},
          {"initial_loss", to_json(r.initial_loss)},
          {"epoch_losses", losses_to_json(r.epoch_losses)},
          {"teacher_logit_stats", summary_to_json(summarize(r.teacher_stats))},
          {"student_logit_stats", summary_to_json(summarize(r.student_stats))}};
}

inline Json to_json(const ShackleReport& r) {
  return {{"teacher_logits", r.teacher_logits},
          {"converged_student_logits", r.converged_student_logits},
          {"T", r.temperature},
          {"delta", r.delta},
          {"max_shift_residual", r.max_shift_residual},
          {"std_ratio", r.std_ratio},
          {"iterations", r.iterations},
          {"final_kl", r.final_kl},
          {"max_mean_drift", r.max_mean_drift}};
}

inline Json to_json(const ToyCaseReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j = {{"logits", row.logits},
              {"vanilla_kl", row.vanilla_kl},
              {"zscore_kl", row.zscore_kl},
              {"predicted", row.predicted}};
    if (row.correct) j["correct"] = *row.correct;
    rows.push_back(std::move(j));
  }
  Json j = {{"teacher_logits", r.teacher_logits},
            {"tau", r.tau},
            {"students", std::move(rows)},
            {"vanilla_ranking", r.vanilla_ranking},
            {"zscore_ranking", r.zscore_ranking}};
  if (r.label) j["label"] = *r.label;
  return j;
}

inline Json to_json(const props::PropertyResult& r) {
  return {{"name", r.name},
          {"passed", r.passed},
          {"cases", r.cases},
          {"worst", r.worst},
          {"counterexample", r.counterexample}};
}

// CSV ----------------------------------------------------------------------

/// Flat per-epoch table: run,scheme,seed,epoch,ce_hard,kd,total.
inline void append_losses(io::CsvWriter& w, const std::string& run, const DistillReport& r) {
  for (std::size_t e = 0; e < r.epoch_losses.size(); ++e) {
    const auto& l = r.epoch_losses[e];
    w.add_row_text({run, scheme_name(r.kd.scheme), std::to_string(r.seed),
                    std::to_string(e + 1), io::format_double(l.ce_hard),
                    io::format_double(l.kd), io::format_double(l.total)});
  }
}

inline io::CsvWriter losses_csv() {
  return io::CsvWriter({"run", "scheme", "seed", "epoch", "ce_hard", "kd", "total"});
}

/// Bivariate-histogram rows: sample_index,mean,std,role.
inline io::CsvWriter logit_stats_csv() {
  return io::CsvWriter({"sample_index", "mean", "std", "role"});
}

inline void append_logit_stats(io::CsvWriter& w, const std::vector<LogitStats>& stats,
                               const std::string& role) {
  for (std::size_t n = 0; n < stats.size(); ++n) {
    w.add_row_text({std::to_string(n), io::format_double(stats[n].mean),
                    io::format_double(stats[n].std), role});
  }
}

inline std::string toy_case_csv(const ToyCaseReport& r) {
  io::CsvWriter w({"student", "vanilla_kl", "zscore_kl", "predicted", "correct"});
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    w.add_row_text({std::to_string(i), io::format_double(row.vanilla_kl),
                    io::format_double(row.zscore_kl), std::to_string(row.predicted),
                    row.correct ? (*row.correct ? "true" : "false") : ""});
  }
  return w.str();
}

}  // namespace zkd::report
