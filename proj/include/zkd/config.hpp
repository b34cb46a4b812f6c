// SPDX-License-Identifier: Apache-2.0
//
// Run configuration for the distill subcommand: one JSON document with data,
// networks, training, distillation and output settings. Unknown keys are
// rejected; every error names the offending JSON path.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "zkd/data.hpp"
#include "zkd/errors.hpp"
#include "zkd/experiments.hpp"
#include "zkd/io.hpp"
#include "zkd/losses.hpp"
#include "zkd/nn.hpp"
#include "zkd/report.hpp"

namespace zkd::config {

using io::Json;

enum class Experiment { Distill, Compare };

struct RunConfig {
  Experiment experiment = Experiment::Distill;
  DataSpec data;
  MlpSpec teacher;
  MlpSpec student;
  TrainConfig teacher_train;
  TrainConfig student_train;
  KDConfig kd;
  std::vector<std::uint64_t> seeds{0};  // offsets added to student init and shuffle seeds
  std::optional<std::string> out;
};

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(display(path_), "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& child(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(at(key), "missing required key");
    return j_.at(key);
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }

  double number(const std::string& key) {
    const Json& v = child(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (seen_.insert(key), fallback);
  }

  std::uint64_t unsigned_int(const std::string& key) {
    const Json& v = child(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(at(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_int(key) : (seen_.insert(key), fallback);
  }

  std::string string(const std::string& key) {
    const Json& v = child(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::uint64_t> unsigned_list(const std::string& key) {
    const Json& v = child(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_unsigned() &&
          !(v[i].is_number_integer() && v[i].get<std::int64_t>() >= 0)) {
        throw ConfigError(at(key) + "/" + std::to_string(i),
                          "expected a non-negative integer");
      }
      out.push_back(v[i].get<std::uint64_t>());
    }
    return out;
  }

  /// Throws on the first key that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

  static std::string display(const std::string& p) { return p.empty() ? "/" : p; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Runs a validate() call, re-throwing parameter errors at `path`.
template <typename F>
void validated(const std::string& path, F&& f) {
  try {
    f();
  } catch (const InvalidParameter& e) {
    throw ConfigError(ObjectReader::display(path), e.what());
  }
}

inline DataSpec parse_data(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  DataSpec d;
  validated(r.at("generator"), [&] { d.generator = generator_from_string(r.string("generator")); });
  d.K = r.unsigned_int("K");
  d.D = r.unsigned_int("D");
  d.N = r.unsigned_int("N");
  d.class_separation = r.number("class_separation", d.class_separation);
  d.noise_std = r.number("noise_std", d.noise_std);
  d.seed = r.unsigned_int("seed", d.seed);
  r.finish();
  validated(path, [&] { d.validate(); });
  return d;
}

inline MlpSpec parse_mlp(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  MlpSpec s;
  for (auto v : r.unsigned_list("layer_sizes")) s.layer_sizes.push_back(v);
  if (r.has("activation")) {
    validated(r.at("activation"),
              [&] { s.activation = activation_from_string(r.string("activation")); });
  }
  s.seed = r.unsigned_int("seed", 0);
  r.finish();
  validated(path, [&] { s.validate(); });
  return s;
}

inline TrainConfig parse_train(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  TrainConfig c;
  c.epochs = r.unsigned_int("epochs", c.epochs);
  c.batch_size = r.unsigned_int("batch_size", c.batch_size);
  c.lr = r.number("lr", c.lr);
  c.seed = r.unsigned_int("seed", c.seed);
  c.eps_guard = r.number("eps_guard", c.eps_guard);
  c.momentum = r.number("momentum", c.momentum);
  if (r.has("lr_schedule")) {
    const std::string sp = r.at("lr_schedule");
    ObjectReader s(r.child("lr_schedule"), sp);
    const std::string type = s.string("type");
    if (type == "constant") {
      c.lr_schedule = ConstantLr{};
    } else if (type == "step_decay") {
      c.lr_schedule = StepDecay{s.number("factor"), s.unsigned_int("every")};
    } else {
      throw ConfigError(sp + "/type", "expected \"constant\" or \"step_decay\"");
    }
    s.finish();
  }
  r.finish();
  validated(path, [&] { c.validate(); });
  return c;
}

inline KDConfig parse_kd(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  KDConfig c;
  c.lambda_ce = r.number("lambda_ce", c.lambda_ce);
  c.lambda_kd = r.number("lambda_kd", c.lambda_kd);
  c.tau = r.number("tau", c.tau);
  const std::string scheme = r.has("scheme") ? r.string("scheme") : "zscore";
  if (scheme == "zscore") {
    c.scheme = ZScore{};
  } else if (scheme == "shared_constant") {
    c.scheme = SharedConstant{r.number("T", c.tau)};
  } else {
    throw ConfigError(r.at("scheme"), "expected \"zscore\" or \"shared_constant\"");
  }
  r.finish();
  validated(path, [&] { c.validate(); });
  return c;
}

inline void check_shape(const MlpSpec& spec, const DataSpec& data, const std::string& path) {
  if (spec.input_dim() != data.D || spec.output_dim() != data.K) {
    throw ConfigError(path + "/layer_sizes",
                      "must start with D = " + std::to_string(data.D) +
                          " and end with K = " + std::to_string(data.K));
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j) {
  detail::ObjectReader r(j, "");
  RunConfig c;
  if (r.has("experiment")) {
    const std::string e = r.string("experiment");
    if (e == "distill") {
      c.experiment = Experiment::Distill;
    } else if (e == "compare") {
      c.experiment = Experiment::Compare;
    } else {
      throw ConfigError("/experiment", "expected \"distill\" or \"compare\"");
    }
  }
  c.data = detail::parse_data(r.child("data"), "/data");
  c.teacher = detail::parse_mlp(r.child("teacher"), "/teacher");
  c.student = detail::parse_mlp(r.child("student"), "/student");
  detail::check_shape(c.teacher, c.data, "/teacher");
  detail::check_shape(c.student, c.data, "/student");
  if (r.has("teacher_train")) c.teacher_train = detail::parse_train(r.child("teacher_train"), "/teacher_train");
  if (r.has("student_train")) c.student_train = detail::parse_train(r.child("student_train"), "/student_train");
  if (r.has("kd")) c.kd = detail::parse_kd(r.child("kd"), "/kd");
  if (r.has("seeds")) {
    c.seeds = r.unsigned_list("seeds");
    if (c.seeds.empty()) throw ConfigError("/seeds", "must not be empty");
  }
  if (r.has("out")) c.out = r.string("out");
  r.finish();
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(path.string(), e.what());
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  return parse_run_config(j);
}

inline Json to_json(const MlpSpec& s) { return spec_to_json(s); }

/// Canonical echo of a parsed config (defaults filled in).
inline Json to_json(const RunConfig& c) {
  Json j = {{"experiment", c.experiment == Experiment::Distill ? "distill" : "compare"},
            {"data", report::to_json(c.data)},
            {"teacher", to_json(c.teacher)},
            {"student", to_json(c.student)},
            {"teacher_train", report::to_json(c.teacher_train)},
            {"student_train", report::to_json(c.student_train)},
            {"kd", report::to_json(c.kd)},
            {"seeds", c.seeds}};
  if (c.out) j["out"] = *c.out;
  return j;
}

}  // namespace zkd::config
