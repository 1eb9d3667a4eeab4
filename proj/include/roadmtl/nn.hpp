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

// Minimal module system: named parameters and buffers, train/eval mode and
// the handful of layers the networks are assembled from.

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "roadmtl/ops.hpp"
#include "roadmtl/tensor.hpp"

namespace roadmtl::nn {

using Rng = std::mt19937_64;

class Module {
 public:
  Module() = default;
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  // Recursive, in registration order; names are dot-separated paths.
  std::vector<std::pair<std::string, Tensor*>> named_parameters();
  std::vector<std::pair<std::string, Tensor*>> named_buffers();
  std::vector<Tensor*> parameters();

  void train(bool on = true);
  void eval() { train(false); }
  bool is_training() const { return training_; }

  void zero_grad();
  // Toggles requires_grad on every parameter (used to freeze discriminators).
  void set_requires_grad(bool on);
  std::size_t parameter_count();

 protected:
  Tensor& register_parameter(const std::string& name, Tensor t);
  Tensor& register_buffer(const std::string& name, Tensor t);
  template <class M>
  std::shared_ptr<M> register_module(const std::string& name,
                                     std::shared_ptr<M> m) {
    children_.emplace_back(name, m);
    return m;
  }

 private:
  void collect(const std::string& prefix, bool buffers,
               std::vector<std::pair<std::string, Tensor*>>& out);

  bool training_ = true;
  // unique_ptr keeps Tensor addresses stable across registrations.
  std::vector<std::pair<std::string, std::unique_ptr<Tensor>>> params_;
  std::vector<std::pair<std::string, std::unique_ptr<Tensor>>> buffers_;
  std::vector<std::pair<std::string, std::shared_ptr<Module>>> children_;
};

struct Conv2dSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
  bool bias = true;
};

class Conv2d : public Module {
 public:
  Conv2d(const Conv2dSpec& spec, Rng& rng);
  Tensor forward(const Tensor& x) const;
  const Conv2dSpec& spec() const { return spec_; }
  Tensor& weight() { return *weight_; }
  Tensor& bias() { return *bias_; }

 private:
  Conv2dSpec spec_;
  Tensor* weight_;
  Tensor* bias_;
};

class BatchNorm2d : public Module {
 public:
  explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);
  Tensor forward(const Tensor& x);
  Tensor& gamma() { return *gamma_; }
  Tensor& beta() { return *beta_; }
  Tensor& running_mean() { return *running_mean_; }
  Tensor& running_var() { return *running_var_; }

 private:
  double momentum_;
  double eps_;
  Tensor* gamma_;
  Tensor* beta_;
  Tensor* running_mean_;
  Tensor* running_var_;
};

class Linear : public Module {
 public:
  Linear(int in_features, int out_features, Rng& rng);
  Tensor forward(const Tensor& x) const;

 private:
  Tensor* weight_;
  Tensor* bias_;
};

// Conv (no bias) -> BatchNorm -> ReLU.
class ConvBnRelu : public Module {
 public:
  ConvBnRelu(int in, int out, int kernel, Rng& rng, int stride = 1);
  Tensor forward(const Tensor& x);

 private:
  std::shared_ptr<Conv2d> conv_;
  std::shared_ptr<BatchNorm2d> bn_;
};

// Same-padded convolution helper (odd kernels).
Conv2dSpec same_conv(int in, int out, int kernel, bool bias, int stride = 1);

}  // namespace roadmtl::nn
