/* Copyright 2026 The roadmtl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Dense NCHW tensors of doubles with tape-free reverse-mode autodiff.
//
// Every tensor is four-dimensional; scalars are 1x1x1x1 and feature vectors
// are N x F x 1 x 1. An op output records its inputs and a backward closure
// only when grad mode is on and some input requires a gradient.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace roadmtl {

struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample() const { return static_cast<std::size_t>(c) * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Whether inputs[i] required a gradient when this node was built. Freezing
  // a parameter later does not reroute gradients through existing graphs.
  std::vector<char> input_needs_grad;
  std::function<void(Node&)> backward;

  // Returns the gradient buffer, allocating zeros on first use.
  std::vector<double>& grad_buffer();

  // Gradient buffer of inputs[i], or nullptr when it takes no gradient.
  double* input_grad(std::size_t i) {
    return input_needs_grad[i] ? inputs[i]->grad_buffer().data() : nullptr;
  }
  const std::vector<double>& input_value(std::size_t i) const {
    return inputs[i]->value;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const { return shape().numel(); }

  std::span<const double> data() const;
  // Mutating values of a tensor already used in a graph invalidates that
  // graph; meant for parameters between optimizer steps and for test setup.
  std::span<double> mutable_data();
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  bool requires_grad() const;
  void set_requires_grad(bool on);

  double item() const;
  double at(int n, int c, int h, int w) const;

  // Accumulates d(this)/d(leaf) into every reachable leaf that requires a
  // gradient. The tensor must hold exactly one element.
  void backward() const;

  // Same values, no history.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape, std::vector<double>,
                            std::vector<Tensor> inputs,
                            std::function<void(detail::Node&)> backward);

  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op output. `backward` is only kept (with `inputs`) when grad mode
// is enabled and at least one input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward);

}  // namespace roadmtl
