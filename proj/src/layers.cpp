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

#include <algorithm>
#include <cmath>

#include "hat/error.hpp"

namespace hat::nn {

Tensor activate(const Tensor& x, Activation kind) {
  switch (kind) {
    case Activation::kRelu:
      return tensor::relu(x);
    case Activation::kTanh:
      return tensor::tanh(x);
  }
  return x;
}

LinearLayer LinearLayer::create(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(in * out);
  std::vector<double> b(out);
  for (double& v : w) v = dist(rng);
  for (double& v : b) v = dist(rng);
  return {Tensor::parameter({out, in}, std::move(w)), Tensor::parameter({out}, std::move(b))};
}

LinearLayer LinearLayer::zeros(std::size_t in, std::size_t out) {
  return {Tensor::parameter({out, in}, std::vector<double>(in * out, 0.0)),
          Tensor::parameter({out}, std::vector<double>(out, 0.0))};
}

void LinearLayer::set_zero() {
  auto w = weight.mutable_values();
  std::fill(w.begin(), w.end(), 0.0);
  auto b = bias.mutable_values();
  std::fill(b.begin(), b.end(), 0.0);
}

void LinearLayer::append_parameters(const std::string& prefix, ParameterList& out) const {
  out.emplace_back(prefix + ".weight", weight);
  out.emplace_back(prefix + ".bias", bias);
}

LayerNormLayer LayerNormLayer::create(std::size_t width, double epsilon) {
  return {Tensor::parameter({width}, std::vector<double>(width, 1.0)),
          Tensor::parameter({width}, std::vector<double>(width, 0.0)), epsilon};
}

void LayerNormLayer::append_parameters(const std::string& prefix, ParameterList& out) const {
  out.emplace_back(prefix + ".gain", gain);
  out.emplace_back(prefix + ".shift", shift);
}

Mlp Mlp::create(std::size_t in, std::size_t width, std::size_t out, Rng& rng) {
  Mlp m;
  m.hidden = LinearLayer::create(in, width, rng);
  m.output = LinearLayer::create(width, out, rng);
  return m;
}

void Mlp::append_parameters(const std::string& prefix, ParameterList& out) const {
  hidden.append_parameters(prefix + ".hidden", out);
  output.append_parameters(prefix + ".output", out);
}

void adam_step(std::span<const NamedParameter> params, OptimizerState& state) {
  if (state.first_moment.empty()) {
    for (const auto& [name, p] : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: parameter list changed between steps");
  }
  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k].second;
    if (!p.has_grad()) continue;
    const std::vector<double> g = p.grad();
    auto values = p.mutable_values();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != values.size()) throw ContractError("adam_step: moment shape mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      values[i] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
    }
  }
}

void zero_grad(std::span<const NamedParameter> params) {
  for (const auto& [name, p] : params) {
    Tensor handle = p;
    handle.zero_grad();
  }
}

GradCheckReport grad_check(const std::function<Tensor()>& f,
                           std::span<const NamedParameter> params, double step,
                           double gradient_floor) {
  auto evaluate = [&f]() {
    tensor::NoGradGuard no_grad;
    const double v = f().item();
    if (!std::isfinite(v)) throw NumericalError("grad_check: objective is not finite");
    return v;
  };

  zero_grad(params);
  {
    Tensor loss = f();
    if (!std::isfinite(loss.item())) throw NumericalError("grad_check: objective is not finite");
    tensor::backward(loss);
  }

  GradCheckReport report;
  for (const auto& [name, p] : params) {
    Tensor handle = p;
    const std::vector<double> analytic = handle.grad();
    auto values = handle.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = evaluate();
      values[i] = saved - step;
      const double minus = evaluate();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), gradient_floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      if (rel > report.max_relative_error) {
        report = {rel, name, i, analytic[i], numeric};
      }
    }
  }
  zero_grad(params);
  return report;
}

}  // namespace hat::nn
