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

#include "hat/training.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "hat/error.hpp"
#include "hat/evaluate.hpp"

namespace hat {
namespace {

namespace fs = std::filesystem;

SceneConfig only(MotionModelKind kind) {
  SceneConfig c;
  c.tracks = 8;
  c.frames = 16;
  c.regime_mix = {0, 0, 0, 0, 0};
  c.regime_mix[static_cast<std::size_t>(kind)] = 1.0;
  return c;
}

HatDims small_dims() {
  HatDims d;
  d.channels = 8;
  return d;
}

std::vector<std::vector<double>> snapshot(const nn::ParameterList& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.second.values().begin(), p.second.values().end());
  return out;
}

TEST(Loss, ZeroForExactPredictionAndIgnoresBoxSize) {
  const std::vector<Anchor> targets = {make_anchor({1, 2, 0}, {2, 4, 1.5}, 0.3, {1, 0})};
  Anchor pred = targets[0];
  pred[kW] += 3.0;
  EXPECT_DOUBLE_EQ(alignment_loss(anchors_to_tensor(std::vector<Anchor>{pred}), targets, 0.1).item(), 0.0);
  pred[kX] += 1.0;
  // Smooth-L1 in the linear zone: |d| - beta/2, averaged over the 7 weighted columns.
  EXPECT_NEAR(alignment_loss(anchors_to_tensor(std::vector<Anchor>{pred}), targets, 0.1).item(),
              0.95 / 7.0, 1e-12);
}

TEST(Training, ZeroEpochsLeaveParametersUnchanged) {
  const auto samples = build_samples(generate_dataset(only(MotionModelKind::kCv), NoiseConfig{}, 1, 1));
  HatModel model = HatModel::create(small_dims(), 2);
  const auto before = snapshot(model.parameters());
  TrainingOptions opts;
  opts.epochs = 0;
  const auto result = train_hat(samples, model, opts);
  EXPECT_TRUE(result.curve.epoch_loss.empty());
  EXPECT_EQ(snapshot(result.model.parameters()), before);
}

TEST(Training, LossDecreasesOnCvData) {
  const auto samples = build_samples(generate_dataset(only(MotionModelKind::kCv), NoiseConfig{}, 2, 3));
  TrainingOptions opts;
  opts.epochs = 6;
  opts.learning_rate = 3e-3;
  const auto result = train_hat(samples, HatModel::create(small_dims(), 4), opts);
  ASSERT_EQ(result.curve.epoch_loss.size(), 6u);
  EXPECT_TRUE(result.curve.decreasing_trend());
  EXPECT_LT(result.curve.epoch_loss.back(), result.curve.epoch_loss.front());
}

TEST(Training, StaticDataShiftsWeightTowardStatic) {
  const auto samples = build_samples(generate_dataset(only(MotionModelKind::kStatic), NoiseConfig{}, 2, 5));
  TrainingOptions opts;
  opts.epochs = 8;
  opts.learning_rate = 3e-3;
  const auto result = train_hat(samples, HatModel::create(small_dims(), 6), opts);
  const WeightReport report = weight_report(samples, result.model);
  ASSERT_EQ(report.rows.size(), 1u);
  const std::size_t stat = static_cast<std::size_t>(MotionModelKind::kStatic);
  EXPECT_GT(report.rows[0].mean_weight[stat], 1.0 / 5.0);
}

TEST(Training, NonFiniteLossRaisesTrainingError) {
  const auto samples = build_samples(generate_dataset(only(MotionModelKind::kCv), NoiseConfig{}, 1, 7));
  HatModel model = HatModel::create(small_dims(), 8);
  auto b = model.hat.refine.output.bias.mutable_values();
  b[0] = std::numeric_limits<double>::quiet_NaN();
  TrainingOptions opts;
  opts.epochs = 1;
  EXPECT_THROW(train_hat(samples, model, opts), TrainingError);
}

TEST(Training, ImplicitLossDecreases) {
  const auto samples = build_samples(generate_dataset(only(MotionModelKind::kCv), NoiseConfig{}, 2, 9));
  TrainingOptions opts;
  opts.epochs = 6;
  opts.learning_rate = 3e-3;
  const auto result = train_implicit(samples, ImplicitModel::create(8, 10), opts);
  EXPECT_LT(result.curve.epoch_loss.back(), result.curve.epoch_loss.front());
}

TEST(Training, SameSeedSameResult) {
  const auto samples = build_samples(generate_dataset(only(MotionModelKind::kCtrv), NoiseConfig{}, 1, 11));
  TrainingOptions opts;
  opts.epochs = 2;
  opts.seed = 3;
  const auto a = train_hat(samples, HatModel::create(small_dims(), 12), opts);
  const auto b = train_hat(samples, HatModel::create(small_dims(), 12), opts);
  EXPECT_EQ(a.curve.epoch_loss, b.curve.epoch_loss);
  EXPECT_EQ(snapshot(a.model.parameters()), snapshot(b.model.parameters()));
}

TEST(Training, RejectsBadOptions) {
  TrainingOptions opts;
  opts.learning_rate = 0.0;
  EXPECT_THROW(opts.validate(), ConfigError);
  opts = {};
  opts.batch_banks = 0;
  EXPECT_THROW(opts.validate(), ConfigError);
}

TEST(LossCurve, TrendCompareThirds) {
  EXPECT_TRUE((LossCurve{{3, 3, 2, 2, 1, 1}}.decreasing_trend()));
  EXPECT_FALSE((LossCurve{{1, 1, 2, 2, 3, 3}}.decreasing_trend()));
}

TEST(ModelFiles, RoundTripReproducesOutputs) {
  const fs::path dir = fs::temp_directory_path() / "hat_training_test";
  fs::create_directories(dir);
  const auto samples = build_samples(generate_dataset(only(MotionModelKind::kCa), NoiseConfig{}, 1, 13));
  const HatModel hat = HatModel::create(small_dims(), 14);
  save_hat_model((dir / "h.hatp").string(), hat);
  const HatModel hat2 = load_hat_model((dir / "h.hatp").string());
  EXPECT_EQ(forward_anchors(hat, samples[0]).values()[0], forward_anchors(hat2, samples[0]).values()[0]);
  EXPECT_EQ(snapshot(hat.parameters()), snapshot(hat2.parameters()));
  EXPECT_EQ(snapshot(hat.query_parameters()), snapshot(hat2.query_parameters()));

  const ImplicitModel imp = ImplicitModel::create(8, 15);
  save_implicit_model((dir / "i.hatp").string(), imp);
  const ImplicitModel imp2 = load_implicit_model((dir / "i.hatp").string());
  EXPECT_EQ(snapshot(imp.parameters()), snapshot(imp2.parameters()));
  EXPECT_EQ(snapshot(imp.query_parameters()), snapshot(imp2.query_parameters()));

  EXPECT_THROW(load_hat_model((dir / "i.hatp").string()), ValidationError);
  EXPECT_THROW(load_hat_model((dir / "missing.hatp").string()), MissingInputError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace hat
