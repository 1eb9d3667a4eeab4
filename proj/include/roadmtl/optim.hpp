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

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "roadmtl/tensor.hpp"

namespace roadmtl::optim {

// Named optimizer state tensors, for checkpointing.
using StateList = std::vector<std::pair<std::string, std::vector<double>*>>;

struct SgdOptions {
  double lr = 2.5e-4;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// SGD with Nesterov momentum. Parameters without a gradient are skipped
// (their momentum buffers are left untouched).
class Sgd {
 public:
  Sgd(std::vector<Tensor*> params, SgdOptions options);
  void step();
  void zero_grad();
  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  StateList state(const std::string& prefix);

 private:
  std::vector<Tensor*> params_;
  std::vector<std::vector<double>> momentum_;
  SgdOptions options_;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamOptions options);
  void step();
  void zero_grad();
  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  StateList state(const std::string& prefix);

 private:
  std::vector<Tensor*> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamOptions options_;
  std::int64_t t_ = 0;
};

// Optional schedule: base * (1 - step/total)^power. Off by default.
double poly_lr(double base, std::int64_t step, std::int64_t total,
               double power = 0.9);

}  // namespace roadmtl::optim
