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

/// \file
/// Supervised training of the learned aligners against next-frame ground
/// truth, with a smooth-L1 loss on position, yaw vector and velocity.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hat/align.hpp"
#include "hat/baselines.hpp"
#include "hat/sim.hpp"

namespace hat {

struct TrainingOptions {
  std::size_t epochs = 6;
  double learning_rate = 1e-3;
  std::size_t batch_banks = 4;
  double smooth_l1_beta = 0.1;
  /// Weight of the loss on HAT's decoded anchor before refinement.
  double pre_refine_weight = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Equal weights on x, y, z, cos, sin, vx, vy; the box size is not learned.
inline constexpr std::array<double, kAnchorDim> kLossColumnWeights = {1, 1, 1, 0, 0, 0, 1, 1, 1, 1};

struct LossCurve {
  std::vector<double> epoch_loss;

  /// Mean of the last third of epochs below the mean of the first third.
  bool decreasing_trend() const;
};

/// HAT plus the query encoder that turns window features into queries.
struct HatModel {
  HatParameters hat;
  QueryEncoder query;

  static HatModel create(const HatDims& dims, std::uint64_t seed);
  nn::ParameterList parameters() const;
  nn::ParameterList query_parameters() const;
};

struct ImplicitModel {
  ImplicitParameters implicit;
  QueryEncoder query;

  static ImplicitModel create(std::size_t channels, std::uint64_t seed);
  nn::ParameterList parameters() const;
  nn::ParameterList query_parameters() const;
};

Tensor alignment_loss(const Tensor& prediction, std::span<const Anchor> targets, double beta);

/// Differentiable final anchors (K x 10) for one sample.
Tensor forward_anchors(const HatModel& model, const AlignmentSample& sample);
Tensor forward_anchors(const ImplicitModel& model, const AlignmentSample& sample);

/// Per-sample training objective. For HAT: loss(final) + w·loss(decoded).
Tensor training_loss(const HatModel& model, const AlignmentSample& sample,
                     const TrainingOptions& options);
Tensor training_loss(const ImplicitModel& model, const AlignmentSample& sample,
                     const TrainingOptions& options);

template <typename Model>
struct TrainingResult {
  Model model;
  LossCurve curve;
};

/// Adam over shuffled minibatches of banks. Parameters are updated in
/// place (the returned model shares storage with `init`). Throws
/// TrainingError with the epoch index when the loss becomes non-finite.
TrainingResult<HatModel> train_hat(std::span<const AlignmentSample> samples, HatModel init,
                                   const TrainingOptions& options);
TrainingResult<ImplicitModel> train_implicit(std::span<const AlignmentSample> samples,
                                             ImplicitModel init, const TrainingOptions& options);

/// Parameter files (.hatp) holding the full model, query encoder included.
/// `manifest` is stored alongside the blobs; loading throws
/// MissingInputError for an absent file and ValidationError for a file of
/// the wrong kind or shape.
void save_hat_model(const std::string& path, const HatModel& model,
                    nlohmann::json manifest = nlohmann::json::object());
HatModel load_hat_model(const std::string& path);
void save_implicit_model(const std::string& path, const ImplicitModel& model,
                         nlohmann::json manifest = nlohmann::json::object());
ImplicitModel load_implicit_model(const std::string& path);

}  // namespace hat
