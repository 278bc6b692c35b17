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
/// Minimal reverse-mode autodiff tensor used by every learned block.
///
/// Tensors are 64-bit, row-major, rank 1 to 3. A `Tensor` is a cheap handle
/// to a shared node; copying the handle aliases the node. Operations record
/// a backward closure only when at least one input requires a gradient and
/// gradient recording is enabled (see `NoGradGuard`).

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hat::tensor {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;

  /// Gradient buffer, allocated (zero-filled) on first use.
  std::span<double> grad_buffer();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double fill);
  static Tensor from_values(Shape shape, std::vector<double> values);
  /// A leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t i, std::size_t j) const;
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient values; zeros when nothing has been accumulated yet.
  std::vector<double> grad() const;
  std::span<double> grad_buffer() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }

  /// Copy of the values as a fresh constant tensor.
  Tensor detach() const;

  TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<TensorNode>& shared_node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

/// Disables graph recording in its scope (inference paths).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds an op result. `backward` receives the result node (its `grad` is
/// populated) and must accumulate into the parents' grad buffers. It is
/// dropped when no parent requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents,
                   std::function<void(TensorNode&)> backward);

// Algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// Pointwise.
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);

// Normalization.
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                  double epsilon);

// Layout.
Tensor concat(const std::vector<Tensor>& xs, std::size_t axis);
Tensor reshape(const Tensor& x, Shape shape);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
/// Inserts a new axis at `axis` and repeats the input `count` times along it.
Tensor expand(const Tensor& x, std::size_t axis, std::size_t count);

// Reductions and losses.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean smooth-L1 between `prediction` and a constant `target`, masked per
/// last-axis column by `column_weights` (size = last dim).
Tensor smooth_l1(const Tensor& prediction, std::span<const double> target,
                 std::span<const double> column_weights, double beta);

/// Reverse pass from a scalar root. Throws ContractError on non-scalar roots.
void backward(const Tensor& loss);

}  // namespace hat::tensor
