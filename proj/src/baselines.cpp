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

#include "hat/baselines.hpp"

#include "hat/error.hpp"

namespace hat {

std::vector<Anchor> single_model_sta(MotionModelKind kind, std::span<const Anchor> anchors,
                                     double dt, const EgoTransform& ego) {
  const AugmentedTransform aug = build_augmented(ego);
  std::vector<Anchor> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors) out.push_back(warp_anchor(predict(kind, a, dt, LatentKinematics<double>{}), aug));
  return out;
}

std::vector<Anchor> single_model_sta(MotionModelKind kind, const InstanceBank& bank, double dt,
                                     const EgoTransform& ego) {
  if (bank.anchors.empty()) throw ContractError("instance bank is empty");
  return single_model_sta(kind, bank.anchors, dt, ego);
}

ImplicitParameters ImplicitParameters::create(std::size_t channels, std::uint64_t seed) {
  if (channels == 0) throw ConfigError("implicit aligner needs at least one channel");
  nn::Rng rng(seed);
  ImplicitParameters p;
  p.channels = channels;
  p.seed = seed;
  p.residual = nn::Mlp::create(channels, channels, kAnchorDim, rng);
  return p;
}

nn::ParameterList ImplicitParameters::parameters() const {
  nn::ParameterList out;
  residual.append_parameters("residual", out);
  return out;
}

Tensor implicit_sta_trace(const InstanceBank& bank, const EgoTransform& ego,
                          const ImplicitParameters& params) {
  bank.validate(params.channels);
  const AugmentedTransform aug = build_augmented(ego);
  std::vector<double> rt(kAnchorDim * kAnchorDim);
  for (std::size_t r = 0; r < kAnchorDim; ++r)
    for (std::size_t c = 0; c < kAnchorDim; ++c)
      rt[r * kAnchorDim + c] = aug.rotation(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
  const Tensor rotation_t = Tensor::from_values({kAnchorDim, kAnchorDim}, std::move(rt));
  const Tensor translation = tensor::expand(
      Tensor::from_values({kAnchorDim}, {aug.translation.data(), aug.translation.data() + kAnchorDim}),
      0, bank.size());
  const Tensor moved = tensor::add(anchors_to_tensor(bank.anchors), params.residual(bank.queries));
  return yaw_normalize_rows(tensor::add(tensor::matmul(moved, rotation_t), translation));
}

std::vector<Anchor> implicit_sta(const InstanceBank& bank, [[maybe_unused]] double dt,
                                 const EgoTransform& ego, const ImplicitParameters& params) {
  tensor::NoGradGuard no_grad;
  return tensor_to_anchors(implicit_sta_trace(bank, ego, params));
}

}  // namespace hat
