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

#include "hat/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hat/align.hpp"
#include "hat/geometry.hpp"
#include "hat/layers.hpp"
#include "hat/motion_models.hpp"

namespace hat {
namespace {

using Latents = LatentKinematics<double>;

Anchor random_anchor(std::mt19937_64& rng, double max_speed) {
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> spd(0.0, max_speed);
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  const double heading = yaw(rng);
  const double v = spd(rng);
  return make_anchor({pos(rng), pos(rng), 0.4}, {1.9, 4.6, 1.6}, heading,
                     {v * std::cos(heading), v * std::sin(heading)});
}

Latents random_latents(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kLatentBound, kLatentBound);
  return {u(rng), u(rng), u(rng), u(rng)};
}

double position_gap(const Anchor& a, const Anchor& b) {
  return std::hypot(a[kX] - b[kX], a[kY] - b[kY]);
}

double max_gap(const Anchor& a, const Anchor& b) {
  double g = 0.0;
  for (std::size_t d = 0; d < kAnchorDim; ++d) g = std::max(g, std::abs(a[d] - b[d]));
  return g;
}

InstanceBank random_bank(std::size_t k, std::size_t channels, double query_scale,
                         std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, query_scale);
  InstanceBank bank;
  for (std::size_t i = 0; i < k; ++i) bank.anchors.push_back(random_anchor(rng, 20.0));
  std::vector<double> q(k * channels);
  for (double& v : q) v = n(rng);
  bank.queries = Tensor::from_values({k, channels}, std::move(q));
  return bank;
}

EgoTransform random_ego(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> yaw(-0.1, 0.1);
  std::uniform_real_distribution<double> step(-5.0, 5.0);
  return EgoTransform::from_yaw(yaw(rng), {step(rng), step(rng), 0.0});
}

std::string format(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

CheckResult check_kinematics(std::size_t draws, std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  std::string worst_model;
  for (std::size_t i = 0; i < draws; ++i) {
    const Anchor a = random_anchor(rng, 20.0);
    const Latents lat = random_latents(rng);
    for (double dt : {0.1, 0.5}) {
      for (MotionModelKind k : kAllMotionModels) {
        const double gap = position_gap(predict(k, a, dt, lat), integrate_oracle(k, a, dt, lat, 1024));
        if (gap > worst) {
          worst = gap;
          worst_model = std::string(to_string(k));
        }
      }
    }
  }
  return {"kinematics_oracle", worst <= tolerance, worst, tolerance,
          std::to_string(draws) + " draws x 2 dt x 5 models, worst " +
              (worst_model.empty() ? "none" : worst_model)};
}

CheckResult check_degeneracy_lattice(std::size_t anchors, std::uint64_t seed) {
  constexpr double kExact = 1e-9;
  constexpr double kBranch = 1e-4;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> omega(-kLatentBound, kLatentBound);
  // Each relation normalized by its own tolerance; pass when ≤ 1.
  double worst = 0.0;
  std::string worst_relation = "none";
  auto note = [&](double gap, double tol, const char* relation) {
    if (gap / tol > worst) {
      worst = gap / tol;
      worst_relation = relation;
    }
  };
  for (std::size_t i = 0; i < anchors; ++i) {
    const Anchor a = random_anchor(rng, 20.0);
    const double dt = i % 2 == 0 ? 0.5 : 0.1;
    const double w = omega(rng);
    const Anchor cv = predict(MotionModelKind::kCv, a, dt, Latents{});
    note(max_gap(predict(MotionModelKind::kCa, a, dt, Latents{}), cv), kExact, "CA(a=0)=CV");
    note(max_gap(predict(MotionModelKind::kCtra, a, dt, Latents{0, 0, 0, w}),
                 predict(MotionModelKind::kCtrv, a, dt, Latents{0, 0, 0, w})),
         kExact, "CTRA(a=0)=CTRV");
    note(max_gap(predict(MotionModelKind::kCtra, a, dt, Latents{}), cv), kExact,
         "CTRA(0,0)=CV");
    note(position_gap(predict(MotionModelKind::kCtrv, a, dt, Latents{0, 0, 0, 1e-6}), cv),
         kBranch, "CTRV(w=1e-6)~CV");
    note(position_gap(predict(MotionModelKind::kStatic, a, dt, random_latents(rng)), a), kExact,
         "STATIC position");
  }
  return {"degeneracy_lattice", worst <= 1.0, worst, 1.0,
          std::to_string(anchors) + " anchors; measured is worst gap / tolerance (" +
              worst_relation + ")"};
}

CheckResult check_hypothesis_hull(std::size_t instances, std::uint64_t seed, double slack) {
  constexpr std::size_t kBank = 100;
  constexpr std::size_t kChannels = 16;
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  std::size_t done = 0;
  for (std::size_t draw = 0; done < instances; ++draw) {
    HatDims dims;
    dims.channels = kChannels;
    const HatParameters params = HatParameters::create(dims, rng());
    const std::size_t k = std::min(kBank, instances - done);
    const InstanceBank bank = random_bank(k, kChannels, 1.0 + static_cast<double>(draw % 4), rng);
    const AlignTrace t = [&] {
      tensor::NoGradGuard guard;
      return align_trace(bank, draw % 2 == 0 ? 0.5 : 0.1, random_ego(rng), params);
    }();
    const std::size_t m = dims.hypothesis_count();
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t d = 0; d < kAnchorDim; ++d) {
        double lo = t.hypotheses.at(i, 0, d);
        double hi = lo;
        for (std::size_t j = 1; j < m; ++j) {
          lo = std::min(lo, t.hypotheses.at(i, j, d));
          hi = std::max(hi, t.hypotheses.at(i, j, d));
        }
        const double v = t.decoded.raw.at(i, d);
        worst = std::max({worst, lo - v, v - hi});
      }
    }
    done += k;
  }
  return {"hypothesis_hull", worst <= slack, worst, slack,
          std::to_string(instances) + " instances; measured is the worst excursion outside the hull"};
}

CheckResult check_gradients(std::uint64_t seed, double tolerance) {
  constexpr std::size_t kK = 2;
  constexpr std::size_t kC = 16;
  std::mt19937_64 rng(seed);
  HatDims dims;
  dims.channels = kC;
  const HatParameters params = HatParameters::create(dims, rng());
  const InstanceBank bank = random_bank(kK, kC, 1.0, rng);
  const EgoTransform ego = random_ego(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> ca(kK * kAnchorDim), cf(kK * kC);
  for (double& v : ca) v = u(rng);
  for (double& v : cf) v = u(rng);
  const Tensor wa = Tensor::from_values({kK, kAnchorDim}, ca);
  const Tensor wf = Tensor::from_values({kK, kC}, cf);
  auto objective = [&](bool corrupt) {
    const AlignTrace t = align_trace(bank, 0.5, ego, params);
    Tensor loss = tensor::add(tensor::sum(tensor::mul(t.mixed.anchors, wa)),
                              tensor::sum(tensor::mul(t.mixed.features, wf)));
    if (corrupt) {
      // Value depends on the parameters, gradient is cut.
      const Tensor cut = t.weights.feature.detach();
      loss = tensor::add(loss, tensor::sum(tensor::mul(cut, cut)));
    }
    return loss;
  };
  const auto list = params.parameters();
  const auto clean = nn::grad_check([&] { return objective(false); }, list);
  nn::ParameterList affected;
  for (const auto& p : list) {
    if (p.first.rfind("feature_weights", 0) == 0) affected.push_back(p);
  }
  const auto broken = nn::grad_check([&] { return objective(true); }, affected);
  const bool control_flagged = broken.max_relative_error > tolerance;
  return {"gradient_integrity", clean.max_relative_error <= tolerance && control_flagged,
          clean.max_relative_error, tolerance,
          "worst " + clean.worst_parameter + "[" + std::to_string(clean.worst_index) +
              "]; corrupted control rel err " + format(broken.max_relative_error) +
              (control_flagged ? " (flagged)" : " (NOT flagged)")};
}

std::vector<CheckResult> run_selftest(bool quick) {
  const std::size_t draws = quick ? 100 : 1000;
  return {check_kinematics(draws, 1), check_degeneracy_lattice(draws, 2),
          check_hypothesis_hull(quick ? 1000 : 10000, 3), check_gradients(4)};
}

}  // namespace hat
