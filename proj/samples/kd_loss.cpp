// SPDX-License-Identifier: Apache-2.0
//
// Scores two students against one teacher under both temperature schemes.
// The second student is an affine copy of the teacher with the wrong scale,
// so only the Z-score objective treats it as a perfect match.
#include <cstdio>

#include "zkd/logitcore.hpp"
#include "zkd/losses.hpp"

int main() {
  using namespace zkd;
  const LogitVector teacher{8.0, 7.5, -2.0, -6.0};
  const LogitVector students[] = {{7.7, 7.8, -2.0, -6.0}, {5.0, 4.75, 0.0, -2.0}};

  const auto zs = zscore(teacher, 2.0);
  const auto st = logit_stats(teacher);
  std::printf("teacher mean %.4f std %.4f\n", st.mean, st.std);
  std::printf("standardized:");
  for (double x : zs.values()) std::printf(" %.4f", x);
  std::printf("\n\n%-8s %-14s %-14s\n", "student", "shared T=2", "z-score");

  const KDConfig shared{1.0, 9.0, 2.0, SharedConstant{2.0}};
  const KDConfig zscored{1.0, 9.0, 2.0, ZScore{}};
  for (std::size_t i = 0; i < 2; ++i) {
    std::printf("S%-7zu %-14.8f %-14.8f\n", i + 1,
                kd_objective(teacher, students[i], 0, shared).kd,
                kd_objective(teacher, students[i], 0, zscored).kd);
  }
}
