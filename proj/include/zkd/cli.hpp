// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: props, maxent, shackles, toycase, distill, stats.
// Exit codes: 0 success, 1 runtime or property failure, 2 usage/config error.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "zkd/config.hpp"
#include "zkd/data.hpp"
#include "zkd/errors.hpp"
#include "zkd/experiments.hpp"
#include "zkd/io.hpp"
#include "zkd/maxent.hpp"
#include "zkd/nn.hpp"
#include "zkd/props.hpp"
#include "zkd/report.hpp"

namespace zkd::cli {

using io::Json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out;
  bool out_given = false;
  std::size_t jobs = 1;
};

namespace detail {

inline std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

/// "a,b,c" -> {a, b, c}; malformed input is a usage error for `flag`.
inline std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (auto cell : zkd::detail::split_commas(text)) {
    double x = 0.0;
    if (!zkd::detail::parse_number(cell, x) || !std::isfinite(x)) {
      throw ConfigError(flag, "'" + std::string(cell) + "' is not a finite number");
    }
    out.push_back(x);
  }
  return out;
}

inline LogitVector logits_arg(const std::vector<double>& v, const std::string& where) {
  try {
    return LogitVector(v);
  } catch (const InvalidParameter& e) {
    throw ConfigError(where, e.what());
  }
}

inline std::vector<double> json_numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(path + "/" + std::to_string(i), "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

inline Json load_json(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(path, e.what());
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path, e.what());
  }
}

inline void write(const std::filesystem::path& dir, const std::string& name,
                  const std::string& text) {
  io::write_file(dir / name, text);
}

}  // namespace detail

// props ----------------------------------------------------------------------

inline int cmd_props(const GlobalOptions& g, std::size_t cases, std::ostream& out) {
  const auto results = props::run_property_suite({cases, g.seed});
  Json arr = Json::array();
  for (const auto& r : results) {
    if (r.passed) {
      out << "PASS " << r.name << " (" << r.cases << " cases, worst " << detail::sci(r.worst)
          << ")\n";
    } else {
      out << "FAIL " << r.name << " -- " << r.counterexample << "\n";
    }
    arr.push_back(report::to_json(r));
  }
  const bool ok = props::all_passed(results);
  out << (ok ? "all properties passed\n" : "property failures detected\n");
  detail::write(g.out, "props.json",
                io::dump_json({{"seed", g.seed}, {"cases", cases}, {"passed", ok},
                               {"properties", std::move(arr)}}));
  return ok ? kExitOk : kExitFailure;
}

// maxent ---------------------------------------------------------------------

inline int cmd_maxent(const GlobalOptions& g, std::size_t K, std::size_t cases, double tol,
                      std::ostream& out) {
  if (K < 2) throw ConfigError("--k", "must be >= 2");
  constexpr double kTvLimit = 1e-6;
  Rng rng(g.seed);
  io::CsvWriter csv({"case", "K", "true_multiplier", "dual_multiplier", "target", "tv_distance",
                     "dual_entropy", "primal_entropy"});
  Json rows = Json::array();
  double worst_tv = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    std::vector<double> l(K);
    for (double& x : l) x = 2.0 * rng.normal();
    const LogitVector logits(l);
    const double beta = rng.uniform(-1.0, 1.0);
    const double target = expectation_at(logits, beta);
    const MaxEntProblem problem{logits, target};
    const MaxEntSolution dual = solve_multiplier(problem, tol);
    const ProbabilityVector primal = primal_maxent_oracle(problem, tol);
    double tv = 0.0;
    for (std::size_t k = 0; k < K; ++k) tv += 0.5 * std::abs(dual.distribution[k] - primal[k]);
    worst_tv = std::max(worst_tv, tv);
    csv.add_row_text({std::to_string(i), std::to_string(K), io::format_double(beta),
                      io::format_double(dual.multiplier), io::format_double(target),
                      io::format_double(tv), io::format_double(dual.entropy),
                      io::format_double(entropy(primal))});
    rows.push_back({{"logits", l}, {"target", target}, {"dual_multiplier", dual.multiplier},
                    {"tv_distance", tv}});
  }
  const MaxEntSolution binary = solve_multiplier({LogitVector{0.0, 1.0}, 0.75}, 1e-12);
  const double binary_err = std::abs(binary.multiplier - std::log(3.0));
  const bool ok = worst_tv <= kTvLimit && binary_err <= 1e-8;
  out << "dual vs primal over " << cases << " cases (K = " << K
      << "): worst total variation " << detail::sci(worst_tv) << "\n";
  out << "binary case [0, 1], target 0.75: multiplier " << detail::fixed(binary.multiplier, 10)
      << " (ln 3 = " << detail::fixed(std::log(3.0), 10) << ")\n";
  out << (ok ? "max-ent certification passed\n" : "max-ent certification FAILED\n");
  detail::write(g.out, "maxent.csv", csv.str());
  detail::write(g.out, "maxent.json",
                io::dump_json({{"seed", g.seed}, {"K", K}, {"cases", std::move(rows)},
                               {"worst_tv", worst_tv}, {"binary_multiplier", binary.multiplier},
                               {"passed", ok}}));
  return ok ? kExitOk : kExitFailure;
}

// shackles -------------------------------------------------------------------

struct ShackleArgs {
  std::string config;
  std::string teacher;
  std::string init;
  double T = 4.0;
  std::optional<double> lr;
  std::size_t max_iters = 1'000'000;
  double tol = 1e-8;
  std::size_t random = 0;
};

inline void print_shackle(const ShackleReport& r, std::ostream& out) {
  out << "iterations " << r.iterations << ", final KL " << detail::sci(r.final_kl) << "\n"
      << "delta (mean(z) - mean(v)) " << detail::fixed(r.delta, 7) << "\n"
      << "max |z - v - delta| " << detail::sci(r.max_shift_residual) << "\n"
      << "std(z) / std(v) " << detail::fixed(r.std_ratio, 7) << "\n";
}

inline int cmd_shackles(const GlobalOptions& g, ShackleArgs a, std::ostream& out) {
  if (a.random > 0) {
    Rng rng(g.seed);
    io::CsvWriter csv({"instance", "K", "T", "delta", "max_shift_residual", "std_ratio",
                       "iterations", "max_mean_drift"});
    Json runs = Json::array();
    bool ok = true;
    for (std::size_t i = 0; i < a.random; ++i) {
      const std::size_t K = 2 + static_cast<std::size_t>(rng.below(9));
      std::vector<double> v(K), z(K);
      for (double& x : v) x = rng.uniform(-3.0, 3.0);
      for (double& x : z) x = rng.uniform(-3.0, 3.0);
      const double T = rng.uniform(2.0, 6.0);
      const ShackleReport r =
          shackle_study(LogitVector(v), T, LogitVector(z), {a.lr, a.max_iters, a.tol});
      ok = ok && r.max_shift_residual < 1e-4 && std::abs(r.std_ratio - 1.0) <= 1e-3;
      csv.add_row_text({std::to_string(i), std::to_string(K), io::format_double(T),
                        io::format_double(r.delta), io::format_double(r.max_shift_residual),
                        io::format_double(r.std_ratio), std::to_string(r.iterations),
                        io::format_double(r.max_mean_drift)});
      runs.push_back(report::to_json(r));
    }
    out << a.random << " random instances: "
        << (ok ? "all satisfy z = v + delta and std(z) = std(v)\n" : "shackle check FAILED\n");
    detail::write(g.out, "shackles.csv", csv.str());
    detail::write(g.out, "shackles.json",
                  io::dump_json({{"seed", g.seed}, {"instances", std::move(runs)}}));
    return ok ? kExitOk : kExitFailure;
  }

  std::vector<double> teacher, init;
  if (!a.config.empty()) {
    const Json j = detail::load_json(a.config);
    config::detail::ObjectReader r(j, "");
    teacher = detail::json_numbers(r.child("teacher"), "/teacher");
    init = detail::json_numbers(r.child("init"), "/init");
    a.T = r.number("T", a.T);
    if (r.has("lr")) a.lr = r.number("lr");
    a.max_iters = r.unsigned_int("max_iters", a.max_iters);
    a.tol = r.number("tol", a.tol);
    r.finish();
  } else {
    if (a.teacher.empty()) throw ConfigError("--teacher", "required (or use --config)");
    teacher = detail::parse_list(a.teacher, "--teacher");
    init = a.init.empty() ? std::vector<double>(teacher.size(), 0.0)
                          : detail::parse_list(a.init, "--init");
  }
  const LogitVector v = detail::logits_arg(teacher, "teacher");
  const LogitVector z0 = detail::logits_arg(init, "init");
  if (v.size() != z0.size()) throw ConfigError("init", "length differs from teacher");
  if (!(a.T > 0.0)) throw ConfigError("T", "must be > 0");
  try {
    const ShackleReport r = shackle_study(v, a.T, z0, {a.lr, a.max_iters, a.tol});
    print_shackle(r, out);
    detail::write(g.out, "shackle.json", io::dump_json(report::to_json(r)));
  } catch (const ConvergenceError& e) {
    detail::write(g.out, "shackle.json",
                  io::dump_json({{"error", e.what()},
                                 {"iterations", e.iterations()},
                                 {"last_student_logits", e.last_state()}}));
    throw;
  }
  return kExitOk;
}

// toycase --------------------------------------------------------------------

struct ToyArgs {
  std::string config;
  std::string teacher;
  std::vector<std::string> students;
  double tau = 2.0;
  std::optional<std::size_t> label;
};

inline int cmd_toycase(const GlobalOptions& g, ToyArgs a, std::ostream& out) {
  std::vector<double> teacher;
  std::vector<std::vector<double>> students;
  if (!a.config.empty()) {
    const Json j = detail::load_json(a.config);
    config::detail::ObjectReader r(j, "");
    teacher = detail::json_numbers(r.child("teacher"), "/teacher");
    const Json& s = r.child("students");
    if (!s.is_array()) throw ConfigError("/students", "expected an array of logit arrays");
    for (std::size_t i = 0; i < s.size(); ++i) {
      students.push_back(detail::json_numbers(s[i], "/students/" + std::to_string(i)));
    }
    a.tau = r.number("tau", a.tau);
    if (r.has("label")) a.label = r.unsigned_int("label");
    r.finish();
  } else {
    if (a.teacher.empty()) throw ConfigError("--teacher", "required (or use --config)");
    if (a.students.empty()) throw ConfigError("--student", "at least one required");
    teacher = detail::parse_list(a.teacher, "--teacher");
    for (const auto& s : a.students) students.push_back(detail::parse_list(s, "--student"));
  }
  const LogitVector v = detail::logits_arg(teacher, "teacher");
  std::vector<LogitVector> zs;
  for (std::size_t i = 0; i < students.size(); ++i) {
    zs.push_back(detail::logits_arg(students[i], "student " + std::to_string(i)));
    if (zs.back().size() != v.size()) {
      throw ConfigError("student " + std::to_string(i), "length differs from teacher");
    }
  }
  if (!(a.tau > 0.0)) throw ConfigError("tau", "must be > 0");
  if (a.label && *a.label >= v.size()) throw ConfigError("label", "outside [0, K)");

  const ToyCaseReport r = toy_case(v, zs, a.tau, a.label);
  out << "student  vanilla_kl(tau=" << io::format_double(a.tau) << ")  zscore_kl     argmax"
      << (a.label ? "  correct" : "") << "\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    char line[160];
    std::snprintf(line, sizeof line, "S%-7zu %-20.10f %-13.10f %-6zu", i + 1, row.vanilla_kl,
                  row.zscore_kl, row.predicted);
    out << line;
    if (row.correct) out << "  " << (*row.correct ? "yes" : "no");
    out << "\n";
  }
  out << "vanilla KL prefers S" << r.vanilla_preferred() + 1 << ", Z-score KL prefers S"
      << r.zscore_preferred() + 1 << "\n";
  detail::write(g.out, "toycase.json", io::dump_json(report::to_json(r)));
  detail::write(g.out, "toycase.csv", report::toy_case_csv(r));
  return kExitOk;
}

// distill --------------------------------------------------------------------

struct DistillRun {
  std::string name;
  std::uint64_t seed_offset = 0;
  KDConfig kd;
};

inline int cmd_distill(GlobalOptions g, const std::string& config_path, std::ostream& out) {
  const config::RunConfig cfg = config::load_run_config(config_path);
  if (!g.out_given && cfg.out) g.out = *cfg.out;
  const std::filesystem::path dir(g.out);

  const Split split = generate(cfg.data);
  const TrainResult teacher = train_teacher(split, cfg.teacher, cfg.teacher_train);
  out << "teacher test accuracy " << detail::fixed(teacher.test_accuracy, 4) << "\n";

  std::vector<DistillRun> runs;
  for (std::uint64_t s : cfg.seeds) {
    if (cfg.experiment == config::Experiment::Compare) {
      KDConfig z = cfg.kd;
      z.scheme = ZScore{};
      KDConfig v = cfg.kd;
      v.scheme = SharedConstant{cfg.kd.tau};
      runs.push_back({"zscore_seed" + std::to_string(s), s, z});
      runs.push_back({"shared_constant_seed" + std::to_string(s), s, v});
    } else {
      runs.push_back({scheme_name(cfg.kd.scheme) + "_seed" + std::to_string(s), s, cfg.kd});
    }
  }

  std::vector<std::optional<DistillReport>> reports(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        MlpSpec ss = cfg.student;
        ss.seed += runs[i].seed_offset;
        TrainConfig tc = cfg.student_train;
        tc.seed += runs[i].seed_offset;
        reports[i] = distill(teacher.net, split, ss, runs[i].kd, tc);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(g.jobs, runs.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Json run_json = Json::array();
  io::CsvWriter losses = report::losses_csv();
  io::CsvWriter stats = report::logit_stats_csv();
  report::append_logit_stats(stats, reports.front()->teacher_stats, "teacher");
  Json summary = Json::object();
  std::map<std::string, std::pair<double, std::size_t>> by_scheme;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const DistillReport& r = *reports[i];
    Json j = report::to_json(r);
    j["run"] = runs[i].name;
    run_json.push_back(std::move(j));
    report::append_losses(losses, runs[i].name, r);
    report::append_logit_stats(stats, r.student_stats, "student_" + runs[i].name);
    save_checkpoint(r.student, dir / ("student_" + runs[i].name + ".json"));
    auto& acc = by_scheme[scheme_name(r.kd.scheme)];
    acc.first += r.student_acc;
    acc.second += 1;
    out << runs[i].name << ": student test accuracy " << detail::fixed(r.student_acc, 4)
        << ", final loss " << detail::fixed(r.epoch_losses.back().total, 6) << "\n";
  }
  for (const auto& [scheme, acc] : by_scheme) {
    const double mean = acc.first / static_cast<double>(acc.second);
    summary[scheme] = {{"mean_student_acc", mean}, {"runs", acc.second}};
    out << "mean student accuracy (" << scheme << "): " << detail::fixed(mean, 4) << "\n";
  }

  save_checkpoint(teacher.net, dir / "teacher.json");
  save_csv(split.train, dir / "train.csv");
  save_csv(split.test, dir / "test.csv");
  detail::write(dir, "config.json", io::dump_json(config::to_json(cfg)));
  detail::write(dir, "losses.csv", losses.str());
  detail::write(dir, "logit_stats.csv", stats.str());
  detail::write(dir, "report.json",
                io::dump_json({{"config", config::to_json(cfg)},
                               {"teacher", {{"test_accuracy", teacher.test_accuracy},
                                            {"epoch_losses",
                                             report::losses_to_json(teacher.epoch_losses)}}},
                               {"runs", std::move(run_json)},
                               {"summary", std::move(summary)}}));
  return kExitOk;
}

// stats ----------------------------------------------------------------------

inline int cmd_stats(const GlobalOptions& g, const std::string& checkpoint,
                     const std::string& data_path, const std::string& role,
                     std::ostream& out) {
  const Mlp net = load_checkpoint(checkpoint);
  const Dataset data = load_csv(data_path);
  const LogitStatistics s = logit_statistics(net, data);
  io::CsvWriter csv = report::logit_stats_csv();
  report::append_logit_stats(csv, s.per_sample, role);
  detail::write(g.out, "logit_stats.csv", csv.str());
  out << data.size() << " samples: mean of logit means " << detail::fixed(s.mean_of_means)
      << ", mean of logit stds " << detail::fixed(s.mean_of_stds) << "\n";
  return kExitOk;
}

// entry point ----------------------------------------------------------------

inline std::string default_out_dir() {
  if (const char* env = std::getenv("ZKD_OUT"); env && *env) return env;
  return "out";
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Z-score logit standardization toolkit for knowledge distillation", "zkd"};
  app.fallthrough();
  app.require_subcommand(1);
  GlobalOptions g;
  g.out = default_out_dir();
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  auto* out_opt = app.add_option("--out", g.out, "Output directory (default $ZKD_OUT or ./out)");
  app.add_option("--jobs", g.jobs, "Worker threads for independent distill runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::size_t prop_cases = 1000;
  auto* props_cmd = app.add_subcommand("props", "Randomized property suite");
  props_cmd->add_option("--cases", prop_cases, "Cases per property")->capture_default_str();

  std::size_t me_k = 5, me_cases = 50;
  double me_tol = 1e-10;
  auto* maxent_cmd = app.add_subcommand("maxent", "Dual vs primal entropy-maximization check");
  maxent_cmd->add_option("--k", me_k, "Number of classes")->capture_default_str();
  maxent_cmd->add_option("--cases", me_cases, "Random instances")->capture_default_str();
  maxent_cmd->add_option("--tol", me_tol, "Solver tolerance")->capture_default_str();

  ShackleArgs sh;
  auto* shackle_cmd = app.add_subcommand("shackles", "Shared-temperature KL minimization study");
  shackle_cmd->add_option("--config", sh.config, "JSON with teacher, init, T, lr, max_iters, tol");
  shackle_cmd->add_option("--teacher", sh.teacher, "Teacher logits, comma separated");
  shackle_cmd->add_option("--init", sh.init, "Initial student logits (default zeros)");
  shackle_cmd->add_option("--T", sh.T, "Shared temperature")->capture_default_str();
  shackle_cmd->add_option("--lr", sh.lr, "Step size (default 0.5 T^2)");
  shackle_cmd->add_option("--max-iters", sh.max_iters, "Iteration cap")->capture_default_str();
  shackle_cmd->add_option("--tol", sh.tol, "Gradient infinity-norm tolerance")->capture_default_str();
  shackle_cmd->add_option("--random", sh.random, "Run N random instances instead");

  ToyArgs toy;
  auto* toy_cmd = app.add_subcommand("toycase", "Vanilla vs Z-score KL on hand-written logits");
  toy_cmd->add_option("--config", toy.config, "JSON with teacher, students, tau, label");
  toy_cmd->add_option("--teacher", toy.teacher, "Teacher logits, comma separated");
  toy_cmd->add_option("--student", toy.students, "Student logits (repeatable)");
  toy_cmd->add_option("--tau", toy.tau, "Temperature / base temperature")->capture_default_str();
  toy_cmd->add_option("--label", toy.label, "Ground-truth class index (0-based)");

  std::string distill_config;
  auto* distill_cmd = app.add_subcommand("distill", "Train a teacher and distill students");
  distill_cmd->add_option("--config", distill_config, "Run configuration JSON")->required();

  std::string ckpt, data_path, role = "model";
  auto* stats_cmd = app.add_subcommand("stats", "Per-sample logit mean/std of a checkpoint");
  stats_cmd->add_option("--checkpoint", ckpt, "Checkpoint JSON")->required();
  stats_cmd->add_option("--data", data_path, "CSV data file")->required();
  stats_cmd->add_option("--role", role, "Value of the role column")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  g.out_given = out_opt->count() > 0;

  try {
    if (*props_cmd) return cmd_props(g, prop_cases, out);
    if (*maxent_cmd) return cmd_maxent(g, me_k, me_cases, me_tol, out);
    if (*shackle_cmd) return cmd_shackles(g, sh, out);
    if (*toy_cmd) return cmd_toycase(g, toy, out);
    if (*distill_cmd) return cmd_distill(g, distill_config, out);
    if (*stats_cmd) return cmd_stats(g, ckpt, data_path, role, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace zkd::cli
