// SPDX-License-Identifier: Apache-2.0
//
// The reference blobs task: K = 10 classes in D = 10 dimensions, separation
// 3, unit noise, N = 2000; a 64-64 ReLU teacher and an 8-unit student.
#pragma once

#include <array>
#include <cstdint>

#include "zkd/data.hpp"
#include "zkd/experiments.hpp"
#include "zkd/losses.hpp"
#include "zkd/nn.hpp"

namespace zkd::reference {

inline DataSpec data_spec() {
  return {Generator::GaussianBlobs, 10, 10, 2000, 3.0, 1.0, 2024};
}

inline MlpSpec teacher_spec() { return {{10, 64, 64, 10}, Activation::ReLU, 11}; }

inline TrainConfig teacher_train() {
  TrainConfig c;
  c.epochs = 40;
  c.batch_size = 32;
  c.lr = 0.05;
  c.seed = 1;
  return c;
}

inline MlpSpec student_spec(std::uint64_t seed) {
  return {{10, 8, 10}, Activation::ReLU, seed};
}

inline TrainConfig student_train(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 40;
  c.batch_size = 32;
  c.lr = 0.1;
  c.seed = seed;
  return c;
}

/// lambda_ce = 1, lambda_kd = 9, tau = 2.
inline KDConfig kd_config(TemperatureScheme scheme) {
  KDConfig c;
  c.scheme = scheme;
  return c;
}

/// Student init seeds are 100 + i, shuffle seeds 200 + i.
inline constexpr std::array<std::uint64_t, 5> kSeeds = {0, 1, 2, 3, 4};

struct Comparison {
  double teacher_acc = 0.0;
  std::array<double, kSeeds.size()> zscore_acc{};
  std::array<double, kSeeds.size()> shared_acc{};
  double zscore_mean = 0.0;
  double shared_mean = 0.0;
};

/// Trains the teacher once, then distills one student per seed under each
/// scheme (shared temperature T = tau).
inline Comparison run_comparison() {
  const Split split = generate(data_spec());
  const TrainResult teacher = train_teacher(split, teacher_spec(), teacher_train());
  Comparison out;
  out.teacher_acc = teacher.test_accuracy;
  for (std::size_t i = 0; i < kSeeds.size(); ++i) {
    const MlpSpec ss = student_spec(100 + kSeeds[i]);
    const TrainConfig tc = student_train(200 + kSeeds[i]);
    const KDConfig z = kd_config(ZScore{});
    const KDConfig s = kd_config(SharedConstant{z.tau});
    out.zscore_acc[i] = distill(teacher.net, split, ss, z, tc).student_acc;
    out.shared_acc[i] = distill(teacher.net, split, ss, s, tc).student_acc;
    out.zscore_mean += out.zscore_acc[i] / static_cast<double>(kSeeds.size());
    out.shared_mean += out.shared_acc[i] / static_cast<double>(kSeeds.size());
  }
  return out;
}

}  // namespace zkd::reference
