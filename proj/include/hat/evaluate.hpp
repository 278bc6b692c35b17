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

// Comparative evaluation of alignment methods, the per-regime decoding
// weight analysis, latency measurement and the IMM switching benchmark.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hat/kalman.hpp"
#include "hat/sim.hpp"
#include "hat/training.hpp"

namespace hat {

/// Regime label of rows aggregating every frame.
inline constexpr char kAllRegimes[] = "all";

struct ErrorStats {
  std::size_t count = 0;
  double mean_translation = 0.0;    // m, planar
  double median_translation = 0.0;  // m, planar
  double mean_yaw = 0.0;            // rad, absolute wrapped difference
  double mean_velocity = 0.0;       // m/s, planar vector difference
};

/// Error statistics of a set of per-instance errors. Throws ContractError
/// when the inputs are empty or differ in length.
ErrorStats summarize_errors(std::span<const double> translation, std::span<const double> yaw,
                            std::span<const double> velocity);

struct EvalRow {
  std::string method;
  std::string regime;  // motion-model name or kAllRegimes
  ErrorStats stats;
};

struct WeightRow {
  MotionModelKind regime = MotionModelKind::kCv;
  std::size_t count = 0;
  std::vector<double> mean_weight;  // one entry per model of the report
};

struct WeightReport {
  std::vector<MotionModelKind> models;
  std::vector<WeightRow> rows;  // regimes with at least one frame

  /// Frame-weighted mean W_a mass on {CTRV, CTRA} over turning regimes
  /// (`turning`) or over CV and CA frames. Throws ContractError when no
  /// such frame exists.
  double turning_model_mass(bool turning) const;
  /// turning_model_mass(true) - turning_model_mass(false).
  double turning_contrast() const;
};

struct LatencyReport {
  std::size_t calls = 0;
  std::size_t instances = 0;  // K per call
  double median_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // one per method x (regimes present + all)
  std::optional<WeightReport> weights;  // present when HAT was evaluated

  /// Throws ContractError for an unknown (method, regime) pair.
  const ErrorStats& find(const std::string& method, const std::string& regime) const;
  std::vector<std::string> methods() const;
};

struct ImmOptions {
  ProcessNoise process;
  MeasurementNoise measurement;
  double self_transition = 0.95;
  std::vector<MotionModelKind> models{kAllMotionModels.begin(), kAllMotionModels.end()};
};

/// Methods to evaluate. Names in the report: sta_<model> for every
/// single-model baseline, imm, implicit, hat, hat_m1.
struct MethodSet {
  bool single_models = true;
  bool imm = true;
  const HatModel* hat = nullptr;
  const HatModel* hat_m1 = nullptr;
  const ImplicitModel* implicit = nullptr;
  ImmOptions imm_options;
};

/// IMM alignment: for every track the filter runs in world coordinates over
/// the observations up to t-1, then predicts one step; the prediction is
/// expressed in the ego frame of t. Result indexed [frame][track]; frame 0
/// holds the observations unchanged.
std::vector<std::vector<Anchor>> imm_alignments(const Scene& scene, const Observations& obs,
                                                const ImmOptions& options);

/// Per-instance errors of every method over build_samples(data), reported
/// per regime and overall. Errors are taken in the ego frame of the target.
/// Throws ContractError on an empty dataset.
EvalReport evaluate(const Dataset& data, const MethodSet& methods);

/// Mean W_a per model and regime. Rows sum to 1.
WeightReport weight_report(std::span<const AlignmentSample> samples, const HatModel& model);

/// Wall time of align on samples in turn, `calls` ≥ 100 times after one
/// warm-up call.
LatencyReport measure_latency(std::span<const AlignmentSample> samples, const HatModel& model,
                              std::size_t calls = 100);

/// A single object alternating between CV and CTRV segments, observed with
/// Gaussian noise in a static ego frame.
struct SwitchingConfig {
  std::size_t frames = 120;
  std::size_t segment = 30;
  double dt = 0.5;
  double speed = 8.0;
  double yaw_rate = 0.1;
  NoiseConfig noise;
  ProcessNoise process;
  double self_transition = 0.95;
};

struct SwitchingTrial {
  double imm_rmse = 0.0;
  double cv_rmse = 0.0;
  double ctrv_rmse = 0.0;
  /// Frames after each switch until μ of the active model first exceeds
  /// 0.5; segment length when it never does.
  std::vector<std::size_t> switch_delay;
};

/// Filters one switching trajectory with IMM{CV, CTRV} and with each model
/// alone; RMSE of the filtered planar position over frames 1..end.
SwitchingTrial run_switching_trial(const SwitchingConfig& config, std::uint64_t seed);

}  // namespace hat
