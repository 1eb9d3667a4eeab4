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

#include "roadmtl/nn.hpp"

#include <cmath>

#include "roadmtl/error.hpp"

namespace roadmtl::nn {

std::vector<std::pair<std::string, Tensor*>> Module::named_parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect("", false, out);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Module::named_buffers() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect("", true, out);
  return out;
}

std::vector<Tensor*> Module::parameters() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

void Module::collect(const std::string& prefix, bool buffers,
                     std::vector<std::pair<std::string, Tensor*>>& out) {
  for (auto& [name, t] : buffers ? buffers_ : params_)
    out.emplace_back(prefix + name, t.get());
  for (auto& [name, child] : children_)
    child->collect(prefix + name + ".", buffers, out);
}

void Module::train(bool on) {
  training_ = on;
  for (auto& [name, child] : children_) child->train(on);
}

void Module::zero_grad() {
  for (Tensor* t : parameters()) t->zero_grad();
}

void Module::set_requires_grad(bool on) {
  for (Tensor* t : parameters()) t->set_requires_grad(on);
}

std::size_t Module::parameter_count() {
  std::size_t n = 0;
  for (Tensor* t : parameters()) n += t->numel();
  return n;
}

Tensor& Module::register_parameter(const std::string& name, Tensor t) {
  t.set_requires_grad(true);
  params_.emplace_back(name, std::make_unique<Tensor>(std::move(t)));
  return *params_.back().second;
}

Tensor& Module::register_buffer(const std::string& name, Tensor t) {
  buffers_.emplace_back(name, std::make_unique<Tensor>(std::move(t)));
  return *buffers_.back().second;
}

Conv2dSpec same_conv(int in, int out, int kernel, bool bias, int stride) {
  return Conv2dSpec{in,         out,        kernel,     kernel, stride,
                    stride,     kernel / 2, kernel / 2, bias};
}

Conv2d::Conv2d(const Conv2dSpec& spec, Rng& rng) : spec_(spec) {
  if (spec.in_channels <= 0 || spec.out_channels <= 0 || spec.kernel_h <= 0 ||
      spec.kernel_w <= 0 || spec.stride_h <= 0 || spec.stride_w <= 0) {
    throw ConfigError("conv2d: non-positive layer dimension");
  }
  const Shape ws{spec.out_channels, spec.in_channels, spec.kernel_h,
                 spec.kernel_w};
  const double fan_in =
      static_cast<double>(spec.in_channels * spec.kernel_h * spec.kernel_w);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  std::vector<double> w(ws.numel());
  for (double& v : w) v = dist(rng);
  weight_ = &register_parameter("weight", Tensor::from(ws, std::move(w)));
  bias_ = nullptr;
  if (spec.bias) {
    bias_ = &register_parameter(
        "bias", Tensor::zeros(Shape{1, spec.out_channels, 1, 1}));
  }
}

Tensor Conv2d::forward(const Tensor& x) const {
  static const Tensor kNone;
  return ops::conv2d(x, *weight_, bias_ ? *bias_ : kNone,
                     {spec_.stride_h, spec_.stride_w, spec_.pad_h,
                      spec_.pad_w});
}

BatchNorm2d::BatchNorm2d(int channels, double momentum, double eps)
    : momentum_(momentum), eps_(eps) {
  const Shape s{1, channels, 1, 1};
  gamma_ = &register_parameter("gamma", Tensor::full(s, 1.0));
  beta_ = &register_parameter("beta", Tensor::zeros(s));
  running_mean_ = &register_buffer("running_mean", Tensor::zeros(s));
  running_var_ = &register_buffer("running_var", Tensor::full(s, 1.0));
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  return ops::batch_norm(x, *gamma_, *beta_, *running_mean_, *running_var_,
                         is_training(), momentum_, eps_);
}

Linear::Linear(int in_features, int out_features, Rng& rng) {
  const Shape ws{out_features, in_features, 1, 1};
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(ws.numel());
  for (double& v : w) v = dist(rng);
  weight_ = &register_parameter("weight", Tensor::from(ws, std::move(w)));
  std::vector<double> b(out_features);
  for (double& v : b) v = dist(rng);
  bias_ = &register_parameter(
      "bias", Tensor::from(Shape{1, out_features, 1, 1}, std::move(b)));
}

Tensor Linear::forward(const Tensor& x) const {
  return ops::linear(x, *weight_, *bias_);
}

ConvBnRelu::ConvBnRelu(int in, int out, int kernel, Rng& rng, int stride) {
  conv_ = register_module(
      "conv", std::make_shared<Conv2d>(same_conv(in, out, kernel, false,
                                                 stride),
                                       rng));
  bn_ = register_module("bn", std::make_shared<BatchNorm2d>(out));
}

Tensor ConvBnRelu::forward(const Tensor& x) {
  return ops::relu(bn_->forward(conv_->forward(x)));
}

}  // namespace roadmtl::nn
