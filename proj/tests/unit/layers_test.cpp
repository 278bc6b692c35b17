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

#include "hat/layers.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hat/error.hpp"

namespace hat::nn {
namespace {

using tensor::Tensor;

Tensor random_input(tensor::Shape shape, Rng& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(tensor::element_count(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from_values(std::move(shape), std::move(v));
}

// Fixed random projection so the objective has O(1) gradients everywhere.
Tensor project(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  return tensor::sum(tensor::mul(y, random_input(y.shape(), rng)));
}

TEST(GradCheck, Quadratic) {
  const Tensor w = Tensor::parameter({1}, {3.0});
  const ParameterList params{{"w", w}};
  const auto report = grad_check([&] { return tensor::mul(w, w); }, params);
  EXPECT_LE(report.max_relative_error, 1e-6);
  tensor::backward(tensor::mul(w, w));
  EXPECT_EQ(w.grad()[0], 6.0);
}

TEST(GradCheck, LinearLayerNormReluSoftmaxChain) {
  Rng rng(5);
  const LinearLayer lin = LinearLayer::create(6, 8, rng);
  LayerNormLayer ln = LayerNormLayer::create(8);
  {
    std::uniform_real_distribution<double> d(0.5, 1.5);
    for (double& g : ln.gain.mutable_values()) g = d(rng);
  }
  const Tensor x = random_input({3, 6}, rng);
  ParameterList params;
  lin.append_parameters("lin", params);
  ln.append_parameters("ln", params);
  const auto f = [&] { return project(tensor::softmax(tensor::relu(ln(lin(x))), 1), 17); };
  EXPECT_LE(grad_check(f, params).max_relative_error, 1e-4);
}

TEST(GradCheck, DetectsCorruptedGradient) {
  Rng rng(6);
  const LinearLayer lin = LinearLayer::create(4, 3, rng);
  const Tensor x = random_input({2, 4}, rng);
  ParameterList params;
  lin.append_parameters("lin", params);
  // Identity in the forward pass, 1.5x in the backward pass.
  auto corrupt = [](const Tensor& t) {
    std::vector<double> v(t.values().begin(), t.values().end());
    return tensor::make_result(t.shape(), std::move(v), {t}, [t](tensor::TensorNode& self) {
      auto g = t.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 1.5 * self.grad[i];
    });
  };
  const auto f = [&] { return project(corrupt(lin(x)), 3); };
  EXPECT_GT(grad_check(f, params).max_relative_error, 1e-2);
}

TEST(GradCheck, NonFiniteObjectiveThrows) {
  const Tensor w = Tensor::parameter({1}, {1.0});
  const ParameterList params{{"w", w}};
  const auto f = [&] {
    return tensor::make_result({1}, {std::nan("")}, {w}, [](tensor::TensorNode&) {});
  };
  EXPECT_THROW(grad_check(f, params), NumericalError);
}

// Central differences for every learned block, 100 random trials.
TEST(GradCheck, LearnedBlocksOverRandomTrials) {
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(1000 + trial);
    const Mlp mlp = Mlp::create(5, 7, 4, rng);
    LayerNormLayer ln = LayerNormLayer::create(4);
    for (double& g : ln.gain.mutable_values()) g = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
    for (double& s : ln.shift.mutable_values()) s = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    const Tensor x = random_input({3, 5}, rng);
    ParameterList params;
    mlp.append_parameters("mlp", params);
    ln.append_parameters("ln", params);
    const auto f = [&] { return project(tensor::tanh(ln(mlp(x))), trial); };
    worst = std::max(worst, grad_check(f, params).max_relative_error);
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(GradCheck, ThreeLayerToyNetwork) {
  Rng rng(21);
  const LinearLayer l1 = LinearLayer::create(4, 6, rng);
  const LinearLayer l2 = LinearLayer::create(6, 6, rng);
  const LinearLayer l3 = LinearLayer::create(6, 2, rng);
  const Tensor x = random_input({5, 4}, rng);
  const std::vector<double> target{0.3, -0.2, 0.1, 0.5, -0.4, 0.2, 0.0, 0.7, -0.1, 0.05};
  const std::vector<double> weights{1.0, 1.0};
  ParameterList params;
  l1.append_parameters("l1", params);
  l2.append_parameters("l2", params);
  l3.append_parameters("l3", params);
  const auto f = [&] {
    return tensor::smooth_l1(l3(activate(l2(activate(l1(x))))), target, weights, 1.0);
  };
  EXPECT_LE(grad_check(f, params).max_relative_error, 1e-4);
}

TEST(Init, UniformWithinFanInBoundAndSeeded) {
  Rng a(42), b(42);
  const LinearLayer la = LinearLayer::create(16, 8, a);
  const LinearLayer lb = LinearLayer::create(16, 8, b);
  for (std::size_t i = 0; i < la.weight.size(); ++i) {
    EXPECT_LE(std::abs(la.weight.at(i)), 0.25);
    EXPECT_EQ(la.weight.at(i), lb.weight.at(i));
  }
}

TEST(Adam, DeterministicAndDescends) {
  auto run = [] {
    const Tensor w = Tensor::parameter({2}, {1.0, -2.0});
    const ParameterList params{{"w", w}};
    OptimizerState state;
    for (int i = 0; i < 50; ++i) {
      zero_grad(params);
      tensor::backward(tensor::sum(tensor::mul(w, w)));
      adam_step(params, state);
    }
    EXPECT_EQ(state.step, 50u);
    return std::vector<double>(w.values().begin(), w.values().end());
  };
  const auto first = run();
  const auto second = run();
  EXPECT_EQ(first, second);
  // Adam moves each coordinate by ~lr per step toward zero.
  EXPECT_NEAR(first[0], 1.0 - 50 * 1e-3, 1e-3);
  EXPECT_NEAR(first[1], -2.0 + 50 * 1e-3, 1e-3);
}

TEST(Adam, RejectsChangedParameterList) {
  const Tensor w = Tensor::parameter({1}, {1.0});
  const Tensor v = Tensor::parameter({1}, {1.0});
  OptimizerState state;
  adam_step(ParameterList{{"w", w}}, state);
  EXPECT_THROW(adam_step(ParameterList{{"w", w}, {"v", v}}, state), ContractError);
}

}  // namespace
}  // namespace hat::nn
