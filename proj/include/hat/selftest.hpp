// Copyright 2026 The HAT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Oracle checks shared by the `selftest` command and the acceptance suite:
// kinematics against RK4, the degeneracy lattice, the hypothesis hull and
// gradient integrity.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hat {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst observed value
  double tolerance = 0.0;  // pass when measured ≤ tolerance
  std::string detail;
};

/// Every closed-form model against 1024-step RK4 over dt ∈ {0.1, 0.5},
/// speed ≤ 20, |ω| ≤ 0.1, |a| ≤ 0.1; worst planar position error.
CheckResult check_kinematics(std::size_t draws, std::uint64_t seed, double tolerance = 1e-8);

/// CA(a=0)=CV, CTRA(a=0)=CTRV, CTRA(0,0)=CV and STATIC position (1e-9,
/// all components), CTRV(ω=1e-6) vs CV position (1e-4).
CheckResult check_degeneracy_lattice(std::size_t anchors, std::uint64_t seed);

/// Pre-refine decoded anchors within the per-dimension hypothesis min/max
/// on random instances with randomly initialized weights.
CheckResult check_hypothesis_hull(std::size_t instances, std::uint64_t seed,
                                  double slack = 1e-12);

/// grad_check of the full align pipeline (K=2, M=5, C=16). The detail also
/// reports the negative control, a loss with a term whose gradient is
/// dropped; the check fails unless the control is flagged.
CheckResult check_gradients(std::uint64_t seed, double tolerance = 1e-4);

/// Runs the four checks; `quick` uses reduced draw counts.
std::vector<CheckResult> run_selftest(bool quick);

}  // namespace hat
