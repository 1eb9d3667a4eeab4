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

#include "roadmtl/mti.hpp"

#include <string>

#include "roadmtl/error.hpp"

namespace roadmtl {

namespace {

const char* task_name(Task t) {
  return t == Task::kSegmentation ? "seg" : "steer";
}

void check_spatial(const Tensor& a, const Tensor& b, const std::string& what) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError(what + ": " + sa.str() + " vs " + sb.str());
  }
}

}  // namespace

int task_channels(Task task) { return task == Task::kSegmentation ? 1 : 4; }

InitialTaskPrediction::InitialTaskPrediction(int scale_index,
                                             int feature_channels, int width,
                                             nn::Rng& rng)
    : scale_(scale_index), feature_channels_(feature_channels), width_(width) {
  if (scale_index < 0 || scale_index > 3)
    throw ContractError("scale index must be in 0..3");
  const int in = feature_channels + (expects_propagated() ? width : 0);
  for (Task t : {Task::kSegmentation, Task::kSteering}) {
    Branch& b = branches_[static_cast<int>(t)];
    const std::string p = task_name(t);
    b.conv1 = register_module(p + ".conv1",
                              std::make_shared<nn::ConvBnRelu>(in, width, 3, rng));
    b.conv2 = register_module(
        p + ".conv2", std::make_shared<nn::ConvBnRelu>(width, width, 3, rng));
    b.predict = register_module(
        p + ".predict",
        std::make_shared<nn::Conv2d>(
            nn::Conv2dSpec{width, task_channels(t), 1, 1, 1, 1, 0, 0, true},
            rng));
  }
}

InitialPrediction InitialTaskPrediction::forward(
    const Tensor& backbone_feature,
    const std::optional<TaskFeatures>& propagated) {
  if (backbone_feature.shape().c != feature_channels_) {
    throw ShapeError("scale " + std::to_string(scale_) + " expects " +
                     std::to_string(feature_channels_) +
                     " backbone channels, got " + backbone_feature.shape().str());
  }
  if (propagated.has_value() != expects_propagated()) {
    throw ContractError("scale " + std::to_string(scale_) +
                        (expects_propagated() ? " requires" : " takes no") +
                        " propagated features");
  }
  InitialPrediction out;
  out.scale_index = scale_;
  for (Task t : {Task::kSegmentation, Task::kSteering}) {
    const int i = static_cast<int>(t);
    Branch& b = branches_[i];
    Tensor x = backbone_feature;
    if (propagated) {
      const Tensor& prop = (*propagated)[i];
      check_spatial(prop, backbone_feature,
                    "propagated features do not match backbone feature at "
                    "scale " + std::to_string(scale_));
      x = ops::concat_channels({backbone_feature, prop});
    }
    Tensor f = b.conv2->forward(b.conv1->forward(x));
    Tensor p = b.predict->forward(f);
    out.features[i] = f;
    if (t == Task::kSegmentation) {
      out.seg_logits = p;
    } else {
      out.steer_feature = p;
    }
  }
  return out;
}

FeaturePropagation::FeaturePropagation(int scale_index, int width, nn::Rng& rng)
    : scale_(scale_index) {
  if (scale_index < 1 || scale_index > 3) {
    throw ContractError("feature propagation exists for scales 1..3, not " +
                        std::to_string(scale_index));
  }
  for (Task t : {Task::kSegmentation, Task::kSteering}) {
    convs_[static_cast<int>(t)] = register_module(
        std::string(task_name(t)) + ".conv",
        std::make_shared<nn::ConvBnRelu>(width + task_channels(t), width, 3,
                                         rng));
  }
}

TaskFeatures FeaturePropagation::forward(const InitialPrediction& pred) {
  if (pred.scale_index < 1) {
    throw ContractError("feature propagation called on scale 0, which has no "
                        "finer scale");
  }
  if (pred.scale_index != scale_) {
    throw ContractError("propagation module for scale " +
                        std::to_string(scale_) + " got scale " +
                        std::to_string(pred.scale_index));
  }
  TaskFeatures out;
  for (Task t : {Task::kSegmentation, Task::kSteering}) {
    const int i = static_cast<int>(t);
    const Tensor& f = pred.features[i];
    Tensor y = convs_[i]->forward(ops::concat_channels({f, pred.prediction(t)}));
    out[i] = ops::upsample_bilinear(y, 2 * f.shape().h, 2 * f.shape().w);
  }
  return out;
}

MultiModalDistillation::MultiModalDistillation(int width, nn::Rng& rng)
    : width_(width) {
  for (Task t : {Task::kSegmentation, Task::kSteering}) {
    gates_[static_cast<int>(t)] = register_module(
        std::string(task_name(t)) + ".gate",
        std::make_shared<nn::Conv2d>(
            nn::Conv2dSpec{2 * width + task_channels(Task::kSegmentation) +
                               task_channels(Task::kSteering),
                           width, 1, 1, 1, 1, 0, 0, true},
            rng));
  }
}

TaskFeatures MultiModalDistillation::forward(const InitialPrediction& pred) {
  const TaskFeatures& features = pred.features;
  const Tensor& seg = features[0];
  const Tensor& steer = features[1];
  check_spatial(seg, steer, "distillation inputs differ in size");
  if (seg.shape().c != width_ || steer.shape().c != width_) {
    throw ShapeError("distillation expects " + std::to_string(width_) +
                     " channels per task");
  }
  check_spatial(seg, pred.seg_logits, "distillation prediction size");
  check_spatial(seg, pred.steer_feature, "distillation prediction size");
  Tensor both = ops::concat_channels(
      {seg, pred.seg_logits, steer, pred.steer_feature});
  TaskFeatures out;
  for (int i = 0; i < kNumTasks; ++i) {
    Tensor gate = ops::sigmoid(gates_[i]->forward(both));
    out[i] = ops::add(features[i], ops::mul(gate, features[1 - i]));
  }
  return out;
}

FeatureAggregation::FeatureAggregation(Task task, int width, nn::Rng& rng)
    : task_(task), width_(width) {
  fuse_ = register_module(
      "fuse", std::make_shared<nn::ConvBnRelu>(4 * width, width, 3, rng));
  project_ = register_module(
      "project",
      std::make_shared<nn::Conv2d>(
          nn::Conv2dSpec{width, task_channels(task), 1, 1, 1, 1, 0, 0, true},
          rng));
}

Tensor FeatureAggregation::forward(const std::array<Tensor, 4>& distilled,
                                   int out_h, int out_w) {
  for (int i = 0; i < 4; ++i) {
    if (!distilled[i].defined()) {
      throw ContractError(std::string("feature aggregation (") +
                          task_name(task_) + ") is missing scale " +
                          std::to_string(i));
    }
  }
  const Shape& s0 = distilled[0].shape();
  std::vector<Tensor> parts{distilled[0]};
  for (int i = 1; i < 4; ++i) {
    parts.push_back(ops::upsample_bilinear(distilled[i], s0.h, s0.w));
  }
  Tensor y = project_->forward(fuse_->forward(ops::concat_channels(parts)));
  return ops::upsample_bilinear(y, out_h, out_w);
}

}  // namespace roadmtl
