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

#include "hat/motion_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hat/error.hpp"

namespace hat {
namespace {

using std::numbers::pi;
using Latents = LatentKinematics<double>;

Anchor aligned_anchor(double x, double y, double speed_mps, double heading) {
  return make_anchor({x, y, 0.4}, {1.9, 4.6, 1.6}, heading,
                     {speed_mps * std::cos(heading), speed_mps * std::sin(heading)});
}

Anchor random_aligned(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> spd(0.0, 20.0);
  std::uniform_real_distribution<double> yaw(-pi, pi);
  return aligned_anchor(pos(rng), pos(rng), spd(rng), yaw(rng));
}

Latents random_latents(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kLatentBound, kLatentBound);
  return {u(rng), u(rng), u(rng), u(rng)};
}

double position_gap(const Anchor& a, const Anchor& b) {
  return std::max(std::abs(a[kX] - b[kX]), std::abs(a[kY] - b[kY]));
}

double max_gap(const Anchor& a, const Anchor& b) {
  double g = 0.0;
  for (std::size_t d = 0; d < kAnchorDim; ++d) g = std::max(g, std::abs(a[d] - b[d]));
  return g;
}

TEST(MotionModelKind, NamesRoundTrip) {
  for (MotionModelKind k : kAllMotionModels) EXPECT_EQ(parse_motion_model(to_string(k)), k);
  EXPECT_THROW(parse_motion_model("bicycle"), ConfigError);
  EXPECT_EQ(static_cast<int>(MotionModelKind::kCtra), 4);
}

TEST(Predict, StaticKeepsPositionAndZeroesVelocity) {
  const Anchor a = aligned_anchor(3.0, -4.0, 7.0, 0.3);
  const Anchor s = predict(MotionModelKind::kStatic, a, 0.5, Latents{});
  EXPECT_EQ(s[kX], a[kX]);
  EXPECT_EQ(s[kY], a[kY]);
  EXPECT_EQ(s[kVx], 0.0);
  EXPECT_EQ(s[kVy], 0.0);
  EXPECT_EQ(s[kCos], a[kCos]);
  EXPECT_EQ(s[kSin], a[kSin]);
}

TEST(Predict, ConstantVelocityExample) {
  const Anchor a = make_anchor({1, 0, 0}, {1, 1, 1}, 0.0, {2, 0});
  const Anchor s = predict(MotionModelKind::kCv, a, 0.5, Latents{});
  EXPECT_DOUBLE_EQ(s[kX], 2.0);
  EXPECT_EQ(s[kVx], 2.0);
  EXPECT_EQ(s[kVy], 0.0);
  EXPECT_EQ(s[kCos], 1.0);
}

TEST(Predict, ConstantAccelerationExample) {
  const Anchor a = make_anchor({0, 0, 0}, {1, 1, 1}, 0.0, {2, 0});
  const Anchor s = predict(MotionModelKind::kCa, a, 0.5, Latents{0.1, 0.0, 0.0, 0.0});
  EXPECT_NEAR(s[kX], 1.0125, 1e-15);
  EXPECT_NEAR(s[kVx], 2.05, 1e-15);
}

TEST(Predict, CtraExampleMatchesIntegration) {
  const Anchor a = aligned_anchor(0.0, 0.0, 5.0, 0.0);
  const Latents lat{0.0, 0.0, 0.1, 0.1};
  const Anchor closed = predict(MotionModelKind::kCtra, a, 0.5, lat);
  const Anchor oracle = integrate_oracle(MotionModelKind::kCtra, a, 0.5, lat, 1024);
  EXPECT_LE(position_gap(closed, oracle), 1e-8);
}

TEST(Predict, RejectsBadInputs) {
  const Anchor a = aligned_anchor(0, 0, 1, 0);
  EXPECT_THROW(predict(MotionModelKind::kCv, a, 0.0, Latents{}), ContractError);
  EXPECT_THROW(predict(MotionModelKind::kCv, a, -0.1, Latents{}), ContractError);
  EXPECT_THROW(predict(MotionModelKind::kCtrv, a, 0.1, Latents{0, 0, 0, 0.2}), ContractError);
}

TEST(Oracle, ConstantVelocityIsExact) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const Anchor a = random_aligned(rng);
    const Anchor closed = predict(MotionModelKind::kCv, a, 0.5, Latents{});
    const Anchor oracle = integrate_oracle(MotionModelKind::kCv, a, 0.5, Latents{}, 3);
    EXPECT_LE(max_gap(closed, oracle), 1e-12);
  }
}

TEST(Oracle, CtrvAgreesAt1024Steps) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const Anchor a = random_aligned(rng);
    const Latents lat = random_latents(rng);
    const Anchor closed = predict(MotionModelKind::kCtrv, a, 0.5, lat);
    const Anchor oracle = integrate_oracle(MotionModelKind::kCtrv, a, 0.5, lat, 1024);
    EXPECT_LE(position_gap(closed, oracle), 1e-10);
  }
}

TEST(Oracle, FourthOrderConvergence) {
  // Large horizon so truncation error dominates roundoff.
  const Anchor a = aligned_anchor(0.0, 0.0, 10.0, 0.2);
  const Latents lat{0.0, 0.0, 0.1, 0.1};
  const double dt = 20.0;
  const Anchor closed = predict(MotionModelKind::kCtra, a, dt, lat);
  const double coarse = position_gap(integrate_oracle(MotionModelKind::kCtra, a, dt, lat, 8), closed);
  const double fine = position_gap(integrate_oracle(MotionModelKind::kCtra, a, dt, lat, 16), closed);
  const double ratio = coarse / fine;
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(Oracle, GridAgreement) {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Anchor a = random_aligned(rng);
    const Latents lat = random_latents(rng);
    for (double dt : {0.1, 0.5}) {
      for (MotionModelKind k : kAllMotionModels) {
        worst = std::max(worst, position_gap(predict(k, a, dt, lat),
                                             integrate_oracle(k, a, dt, lat, 1024)));
      }
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(Properties, DegeneracyLattice) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 200; ++i) {
    const Anchor a = random_aligned(rng);
    const double dt = i % 2 ? 0.1 : 0.5;
    const double w = std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
    const Anchor cv = predict(MotionModelKind::kCv, a, dt, Latents{});
    EXPECT_LE(max_gap(predict(MotionModelKind::kCa, a, dt, Latents{}), cv), 1e-9);
    EXPECT_LE(position_gap(predict(MotionModelKind::kCtrv, a, dt, Latents{0, 0, 0, 1e-8}), cv), 1e-4);
    EXPECT_LE(max_gap(predict(MotionModelKind::kCtra, a, dt, Latents{0, 0, 0, w}),
                      predict(MotionModelKind::kCtrv, a, dt, Latents{0, 0, 0, w})),
              1e-9);
    EXPECT_LE(max_gap(predict(MotionModelKind::kCtra, a, dt, Latents{}), cv), 1e-9);
    const Anchor s = predict(MotionModelKind::kStatic, a, dt, random_latents(rng));
    EXPECT_EQ(s[kX], a[kX]);
    EXPECT_EQ(s[kY], a[kY]);
  }
}

TEST(Properties, BoxFieldsBitIdentical) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 100; ++i) {
    const Anchor a = random_aligned(rng);
    const Latents lat = random_latents(rng);
    for (MotionModelKind k : kAllMotionModels) {
      const Anchor s = predict(k, a, 0.5, lat);
      for (std::size_t d : {kZ, kW, kL, kH}) EXPECT_EQ(s[d], a[d]);
    }
  }
}

TEST(Properties, SpeedEvolution) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 100; ++i) {
    const Anchor a = random_aligned(rng);
    const Latents lat = random_latents(rng);
    EXPECT_NEAR(speed(predict(MotionModelKind::kCtrv, a, 0.5, lat)), speed(a), 1e-12);
    EXPECT_NEAR(speed(predict(MotionModelKind::kCtra, a, 0.5, lat)), speed(a) + lat.accel * 0.5,
                1e-12);
  }
}

TEST(Properties, TurnBranchesAreContinuous) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Anchor a = random_aligned(rng);
    const double eps = 1e-9;
    for (MotionModelKind k : {MotionModelKind::kCtrv, MotionModelKind::kCtra}) {
      const double accel = k == MotionModelKind::kCtra ? 0.05 : 0.0;
      const Anchor above = predict(k, a, 0.5, Latents{0, 0, accel, kTurnRateThreshold + eps});
      const Anchor below = predict(k, a, 0.5, Latents{0, 0, accel, kTurnRateThreshold - eps});
      EXPECT_LE(max_gap(above, below), 1e-4);
    }
  }
}

TEST(Properties, DualJacobianMatchesFiniteDifference) {
  using D = Dual<4>;
  std::mt19937_64 rng(18);
  for (int i = 0; i < 20; ++i) {
    const Anchor a = random_aligned(rng);
    const Latents lat = random_latents(rng);
    BasicAnchor<D> ad;
    for (std::size_t d = 0; d < kAnchorDim; ++d) ad[d] = D(a[d]);
    const LatentKinematics<D> ld{D::variable(lat.ax, 0), D::variable(lat.ay, 1),
                                 D::variable(lat.accel, 2), D::variable(lat.yaw_rate, 3)};
    for (MotionModelKind k : kAllMotionModels) {
      const BasicAnchor<D> out = predict(k, ad, 0.5, ld);
      for (std::size_t j = 0; j < kLatentCount; ++j) {
        const double h = 1e-6;
        Latents up = lat, down = lat;
        double* fu[] = {&up.ax, &up.ay, &up.accel, &up.yaw_rate};
        double* fd[] = {&down.ax, &down.ay, &down.accel, &down.yaw_rate};
        *fu[j] = std::clamp(*fu[j] + h, -kLatentBound, kLatentBound);
        *fd[j] = std::clamp(*fd[j] - h, -kLatentBound, kLatentBound);
        const double span = *fu[j] - *fd[j];
        const Anchor pu = predict(k, a, 0.5, up);
        const Anchor pd = predict(k, a, 0.5, down);
        for (std::size_t d = 0; d < kAnchorDim; ++d) {
          const double fdiff = (pu[d] - pd[d]) / span;
          EXPECT_NEAR(out[d].tangent[j], fdiff, 1e-5 * (1.0 + std::abs(fdiff)))
              << to_string(k) << " dim " << d << " latent " << j;
        }
      }
    }
  }
}

TEST(LatentHead, ZeroHeadGivesZeroLatents) {
  const LatentHead head = LatentHead::zeros(8);
  const std::vector<double> q(8, 0.7);
  const Latents lat = decode_latents(q, head);
  EXPECT_EQ(lat.ax, 0.0);
  EXPECT_EQ(lat.ay, 0.0);
  EXPECT_EQ(lat.accel, 0.0);
  EXPECT_EQ(lat.yaw_rate, 0.0);
}

TEST(LatentHead, OutputsStayInBounds) {
  nn::Rng rng(19);
  const LatentHead head = LatentHead::create(8, rng);
  std::normal_distribution<double> n(0.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> q(8);
    for (double& v : q) v = n(rng);
    const Latents lat = decode_latents(q, head);
    for (double v : {lat.ax, lat.ay, lat.accel, lat.yaw_rate}) {
      EXPECT_LE(std::abs(v), kLatentBound);
    }
  }
}

TEST(LatentHead, AlignmentLossRespondsToHeadWeights) {
  // Finite-difference probe: a turning target pulls on the yaw-rate output.
  nn::Rng rng(20);
  LatentHead head = LatentHead::create(8, rng);
  std::vector<double> q(8);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = 0.3 * static_cast<double>(i) - 1.0;
  const Anchor a = aligned_anchor(0.0, 0.0, 8.0, 0.0);
  const Anchor target = predict(MotionModelKind::kCtrv, a, 0.5, Latents{0, 0, 0, 0.09});
  auto loss = [&] {
    const Anchor p = predict(MotionModelKind::kCtrv, a, 0.5, decode_latents(q, head));
    return std::pow(p[kX] - target[kX], 2) + std::pow(p[kY] - target[kY], 2);
  };
  auto w = head.mlp.output.bias.mutable_values();
  const double base = w[3];
  const double h = 1e-4;
  w[3] = base + h;
  const double up = loss();
  w[3] = base - h;
  const double down = loss();
  w[3] = base;
  EXPECT_GT(std::abs(up - down) / (2 * h), 1e-6);
}

}  // namespace
}  // namespace hat
