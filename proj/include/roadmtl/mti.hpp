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

// Building blocks of the multi-scale task-interaction network for the two
// tasks (road segmentation and the 4-channel steering feature).

#pragma once

#include <array>
#include <memory>
#include <optional>

#include "roadmtl/nn.hpp"

namespace roadmtl {

enum class Task { kSegmentation = 0, kSteering = 1 };
inline constexpr int kNumTasks = 2;

// Output channels of a task's prediction: 1 road logit or 4 steering
// feature channels.
int task_channels(Task task);

// Per-task D-channel feature maps.
using TaskFeatures = std::array<Tensor, kNumTasks>;

struct InitialPrediction {
  int scale_index = 0;
  Tensor seg_logits;     // N x 1 x h x w
  Tensor steer_feature;  // N x 4 x h x w
  TaskFeatures features;  // N x D x h x w per task

  const Tensor& prediction(Task t) const {
    return t == Task::kSegmentation ? seg_logits : steer_feature;
  }
};

class InitialTaskPrediction : public nn::Module {
 public:
  // Scales 0..2 expect propagated features from the next coarser scale,
  // scale 3 does not.
  InitialTaskPrediction(int scale_index, int feature_channels, int width,
                        nn::Rng& rng);

  InitialPrediction forward(const Tensor& backbone_feature,
                            const std::optional<TaskFeatures>& propagated);
  int scale_index() const { return scale_; }
  bool expects_propagated() const { return scale_ < 3; }

 private:
  struct Branch {
    std::shared_ptr<nn::ConvBnRelu> conv1;
    std::shared_ptr<nn::ConvBnRelu> conv2;
    std::shared_ptr<nn::Conv2d> predict;
  };
  int scale_;
  int feature_channels_;
  int width_;
  std::array<Branch, kNumTasks> branches_;
};

// Converts a scale's prediction to task features at the next finer scale.
class FeaturePropagation : public nn::Module {
 public:
  FeaturePropagation(int scale_index, int width, nn::Rng& rng);
  TaskFeatures forward(const InitialPrediction& pred);

 private:
  int scale_;
  std::array<std::shared_ptr<nn::ConvBnRelu>, kNumTasks> convs_;
};

// Cross-task spatial attention: each task's feature is augmented with the
// other task's feature, gated by a sigmoid map computed from both tasks'
// features and predictions.
class MultiModalDistillation : public nn::Module {
 public:
  MultiModalDistillation(int width, nn::Rng& rng);
  TaskFeatures forward(const InitialPrediction& pred);

 private:
  int width_;
  std::array<std::shared_ptr<nn::Conv2d>, kNumTasks> gates_;
};

// Fuses the four distilled scales of one task into its final output at the
// input resolution.
class FeatureAggregation : public nn::Module {
 public:
  FeatureAggregation(Task task, int width, nn::Rng& rng);
  // `distilled` is ordered finest first. Every entry must be defined.
  Tensor forward(const std::array<Tensor, 4>& distilled, int out_h, int out_w);

 private:
  Task task_;
  int width_;
  std::shared_ptr<nn::ConvBnRelu> fuse_;
  std::shared_ptr<nn::Conv2d> project_;
};

}  // namespace roadmtl
