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

// The `hat` command: gen | train | eval | compare | weights | selftest.

#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "hat/config.hpp"
#include "hat/evaluate.hpp"
#include "hat/selftest.hpp"
#include "hat/serialize.hpp"

namespace hat::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitMissingInput = 2,
  kExitValidation = 3,
  kExitNumerical = 4,
};

/// Output file names inside the output directory.
inline constexpr char kTrainScenesFile[] = "scenes_train.jsonl";
inline constexpr char kTestScenesFile[] = "scenes_test.jsonl";
inline constexpr char kHatParamsFile[] = "hat.hatp";
inline constexpr char kHatM1ParamsFile[] = "hat_m1.hatp";
inline constexpr char kImplicitParamsFile[] = "implicit.hatp";
inline constexpr char kLossFile[] = "loss.csv";
inline constexpr char kEvalCsvFile[] = "eval.csv";
inline constexpr char kEvalJsonFile[] = "eval.json";
inline constexpr char kLatencyFile[] = "latency.json";
inline constexpr char kCompareFile[] = "compare.csv";
inline constexpr char kWeightsFile[] = "weights.csv";
inline constexpr char kLockFile[] = ".hat.lock";

struct RunContext {
  ExperimentConfig config;
  std::string out_dir;
  std::ostream* log = nullptr;  // progress messages when set

  std::string path(const std::string& file) const;
  /// Provenance of training-derived artifacts (seed = training seed).
  Provenance provenance() const;
  /// Provenance of scene files (seed = data seed).
  Provenance data_provenance() const;
};

/// Output directory precedence: `out_override`, config output.dir,
/// HAT_OUTPUT_ROOT, "hat_out".
RunContext make_context(ExperimentConfig config, const std::string& out_override = "");

/// Hash of the scene, noise and data sections; scene files record it.
std::string data_hash(const ExperimentConfig& config);

/// Scene files for the training and test sets.
void cmd_gen(const RunContext& ctx);
/// Trains HAT, HAT with M=1 (CV) and the implicit aligner on the training
/// scenes; writes the three parameter files and loss.csv.
void cmd_train(const RunContext& ctx);
/// Evaluates every method on the test scenes; writes eval.csv, eval.json
/// and latency.json (the only artifact with wall-clock content).
EvalReport cmd_eval(const RunContext& ctx);
/// Mean translation error per method and regime; writes compare.csv and
/// prints the aligned table to `out`.
EvalReport cmd_compare(const RunContext& ctx, std::ostream& out);
/// Per-regime W_a table of the trained HAT model; writes weights.csv.
WeightReport cmd_weights(const RunContext& ctx);
/// Oracle checks; prints one line per check.
std::vector<CheckResult> cmd_selftest(bool quick, std::ostream& out);

/// Maps library exceptions to exit codes.
int exit_code_for(const std::exception& e);

/// Entry point of the executable. Errors are printed to `err` as one JSON
/// object: {"error": <category>, "exit_code": n, "message": ...}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hat::cli
