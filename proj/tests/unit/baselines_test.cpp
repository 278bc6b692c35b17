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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hat/error.hpp"

namespace hat {
namespace {

Anchor moving(double x, double y, double heading, double speed) {
  return make_anchor({x, y, 0.5}, {1.8, 4.5, 1.6}, heading,
                     {speed * std::cos(heading), speed * std::sin(heading)});
}

EgoTransform some_ego() { return EgoTransform::from_yaw(-0.15, {2.0, -1.0, 0.0}); }

InstanceBank bank_of(std::vector<Anchor> anchors, std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> q(anchors.size() * channels);
  for (double& v : q) v = n(rng);
  InstanceBank bank;
  bank.queries = Tensor::from_values({anchors.size(), channels}, q);
  bank.anchors = std::move(anchors);
  return bank;
}

void expect_near(const Anchor& a, const Anchor& b, double tol) {
  for (std::size_t d = 0; d < kAnchorDim; ++d) EXPECT_NEAR(a[d], b[d], tol) << "dim " << d;
}

TEST(SingleModel, MatchesManualComposition) {
  const std::vector<Anchor> anchors = {moving(3, 4, 0.3, 6), moving(-10, 2, 2.5, 0.5)};
  const EgoTransform ego = some_ego();
  const AugmentedTransform aug = build_augmented(ego);
  for (MotionModelKind kind : kAllMotionModels) {
    const auto out = single_model_sta(kind, anchors, 0.5, ego);
    ASSERT_EQ(out.size(), anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const Anchor manual = warp_anchor(predict(kind, anchors[i], 0.5, LatentKinematics<double>{}), aug);
      expect_near(out[i], manual, 1e-12);
    }
  }
}

TEST(SingleModel, CvEqualsStaticForStationaryObject) {
  const std::vector<Anchor> anchors = {moving(5, -3, 1.0, 0.0)};
  const auto cv = single_model_sta(MotionModelKind::kCv, anchors, 0.5, some_ego());
  const auto st = single_model_sta(MotionModelKind::kStatic, anchors, 0.5, some_ego());
  expect_near(cv[0], st[0], 1e-12);
}

TEST(SingleModel, BankOverloadMatchesSpan) {
  const InstanceBank bank = bank_of({moving(1, 1, 0.1, 3), moving(2, 2, 0.2, 4)}, 8, 1);
  const auto a = single_model_sta(MotionModelKind::kCtrv, bank, 0.5, some_ego());
  const auto b = single_model_sta(MotionModelKind::kCtrv, bank.anchors, 0.5, some_ego());
  EXPECT_EQ(a, b);
}

TEST(SingleModel, HatWithOneModelAndZeroLatentsMatches) {
  HatDims dims;
  dims.channels = 16;
  dims.models = {MotionModelKind::kCv};
  HatParameters params = HatParameters::create(dims, 3);
  params.refine.output.set_zero();
  params.latent_head = LatentHead::zeros(dims.channels);
  const InstanceBank bank = bank_of({moving(4, 0, 0.0, 7), moving(-6, 8, 1.2, 2)}, 16, 2);
  const AlignmentResult r = align(bank, 0.5, some_ego(), params);
  const auto sta = single_model_sta(MotionModelKind::kCv, bank, 0.5, some_ego());
  for (std::size_t i = 0; i < sta.size(); ++i) expect_near(r.anchors[i], sta[i], 1e-9);
}

TEST(Implicit, ZeroResidualIsPureWarp) {
  ImplicitParameters params = ImplicitParameters::create(16, 4);
  params.residual.hidden.set_zero();
  params.residual.output.set_zero();
  const InstanceBank bank = bank_of({moving(4, 1, 0.4, 7), moving(-6, 8, 1.2, 2)}, 16, 5);
  const EgoTransform ego = some_ego();
  const auto out = implicit_sta(bank, 0.5, ego, params);
  ASSERT_EQ(out.size(), bank.size());
  const AugmentedTransform aug = build_augmented(ego);
  for (std::size_t i = 0; i < out.size(); ++i) expect_near(out[i], warp_anchor(bank.anchors[i], aug), 1e-12);
}

TEST(Implicit, OutputCountAndUnitYaw) {
  const ImplicitParameters params = ImplicitParameters::create(16, 6);
  std::vector<Anchor> anchors;
  for (int i = 0; i < 7; ++i) anchors.push_back(moving(i, -i, 0.3 * i, i));
  const auto out = implicit_sta(bank_of(anchors, 16, 7), 0.5, some_ego(), params);
  ASSERT_EQ(out.size(), 7u);
  for (const Anchor& a : out) EXPECT_NEAR(std::hypot(a[kCos], a[kSin]), 1.0, 1e-12);
}

TEST(Implicit, RejectsEmptyOrMismatchedBank) {
  const ImplicitParameters params = ImplicitParameters::create(16, 8);
  InstanceBank empty;
  empty.queries = Tensor::zeros({0, 16});
  EXPECT_THROW(implicit_sta(empty, 0.5, some_ego(), params), ContractError);
  const InstanceBank narrow = bank_of({moving(0, 0, 0, 1)}, 8, 9);
  EXPECT_THROW(implicit_sta(narrow, 0.5, some_ego(), params), ContractError);
}

TEST(Implicit, GradientsPassFiniteDifferenceCheck) {
  const ImplicitParameters params = ImplicitParameters::create(16, 10);
  const InstanceBank bank = bank_of({moving(4, 1, 0.4, 7), moving(-6, 8, 1.2, 2)}, 16, 11);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(2 * kAnchorDim);
  for (double& v : c) v = u(rng);
  const Tensor w = Tensor::from_values({2, kAnchorDim}, c);
  const EgoTransform ego = some_ego();
  auto objective = [&] { return tensor::sum(tensor::mul(implicit_sta_trace(bank, ego, params), w)); };
  const auto list = params.parameters();
  const auto report = nn::grad_check(objective, list);
  EXPECT_LE(report.max_relative_error, 1e-4) << report.worst_parameter;
}

}  // namespace
}  // namespace hat
