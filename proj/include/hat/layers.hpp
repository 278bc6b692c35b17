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
/// Learned building blocks on top of the tensor tape: linear and layer-norm
/// layers, a two-layer MLP, Adam, and a finite-difference gradient checker.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hat/tensor.hpp"

namespace hat::nn {

using tensor::Tensor;

/// Named parameter handle, as exposed for optimizers and serialization.
using NamedParameter = std::pair<std::string, Tensor>;
using ParameterList = std::vector<NamedParameter>;

enum class Activation { kRelu, kTanh };

/// Hidden-layer activation used throughout, including σ in feature fusion.
inline constexpr Activation kDefaultActivation = Activation::kRelu;

Tensor activate(const Tensor& x, Activation kind = kDefaultActivation);

using Rng = std::mt19937_64;

struct LinearLayer {
  Tensor weight;  // out x in
  Tensor bias;    // out

  /// Uniform(-sqrt(1/in), +sqrt(1/in)) for weight and bias.
  static LinearLayer create(std::size_t in, std::size_t out, Rng& rng);
  static LinearLayer zeros(std::size_t in, std::size_t out);

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }
  Tensor operator()(const Tensor& x) const { return tensor::linear(x, weight, bias); }
  void set_zero();
  void append_parameters(const std::string& prefix, ParameterList& out) const;
};

struct LayerNormLayer {
  Tensor gain;
  Tensor shift;
  double epsilon = 1e-5;

  static LayerNormLayer create(std::size_t width, double epsilon = 1e-5);
  Tensor operator()(const Tensor& x) const {
    return tensor::layer_norm(x, gain, shift, epsilon);
  }
  void append_parameters(const std::string& prefix, ParameterList& out) const;
};

/// Linear -> activation -> linear.
struct Mlp {
  LinearLayer hidden;
  LinearLayer output;

  static Mlp create(std::size_t in, std::size_t width, std::size_t out, Rng& rng);
  std::size_t in_features() const { return hidden.in_features(); }
  std::size_t out_features() const { return output.out_features(); }
  Tensor operator()(const Tensor& x) const { return output(activate(hidden(x))); }
  void append_parameters(const std::string& prefix, ParameterList& out) const;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  explicit OptimizerState(AdamOptions opts = {}) : options(opts) {}
};

/// One Adam update from the accumulated gradients; parameters without a
/// gradient are left alone. Moments are allocated on the first call.
void adam_step(std::span<const NamedParameter> params, OptimizerState& state);

void zero_grad(std::span<const NamedParameter> params);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares reverse-mode gradients of the scalar `f` against central
/// differences. Relative error is |a - n| / max(|a|, |n|, gradient_floor); the floor
/// keeps central-difference roundoff on near-zero gradients from counting.
/// Throws NumericalError when `f` evaluates to a non-finite value.
GradCheckReport grad_check(const std::function<Tensor()>& f,
                           std::span<const NamedParameter> params, double step = 1e-5,
                           double gradient_floor = 1e-3);

}  // namespace hat::nn
