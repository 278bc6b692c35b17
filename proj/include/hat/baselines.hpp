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
/// Learned and explicit single-output aligners used as reference points.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hat/align.hpp"
#include "hat/geometry.hpp"
#include "hat/layers.hpp"
#include "hat/motion_models.hpp"

namespace hat {

/// warp(predict(kind, a, dt, 0)) per instance. Latents are zero, so CA and
/// CTRA reduce to their constant-velocity / constant-turn forms.
std::vector<Anchor> single_model_sta(MotionModelKind kind, std::span<const Anchor> anchors,
                                     double dt, const EgoTransform& ego);
std::vector<Anchor> single_model_sta(MotionModelKind kind, const InstanceBank& bank, double dt,
                                     const EgoTransform& ego);

/// Query-only aligner: no motion model, a residual regressed from the query
/// is added before the ego warp.
struct ImplicitParameters {
  std::size_t channels = 0;
  std::uint64_t seed = 0;
  nn::Mlp residual;  // C -> C -> 10

  static ImplicitParameters create(std::size_t channels, std::uint64_t seed);
  nn::ParameterList parameters() const;
};

/// Differentiable form: K x 10, yaw renormalized.
Tensor implicit_sta_trace(const InstanceBank& bank, const EgoTransform& ego,
                          const ImplicitParameters& params);
/// `dt` is accepted for interface parity with the explicit aligners; the
/// residual is learned for the training interval.
std::vector<Anchor> implicit_sta(const InstanceBank& bank, double dt, const EgoTransform& ego,
                                 const ImplicitParameters& params);

}  // namespace hat
