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

// Task heads: steering heads that reduce a 4-channel steering feature to an
// angle, the steering-feature segmentation head, and the auxiliary
// segmentation head over the three finest backbone levels.

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "roadmtl/nn.hpp"

namespace roadmtl {

inline constexpr int kSteerFeatureChannels = 4;

enum class ScaleTag { kFull, kS4, kS8, kS16, kS32 };

std::string to_string(ScaleTag tag);
// Scale tag of initial-prediction scale i (0 -> 1/4 ... 3 -> 1/32).
ScaleTag scale_tag_for_level(int level);

enum class LayerKind { kConv, kBatchNorm, kRelu, kMaxPool, kFlatten, kLinear };

std::string to_string(LayerKind kind);

// One row of a steering head: the layer and the activation shape after it.
// Flatten/Linear rows report their feature count in `c` with h = w = 1.
struct LayerTrace {
  LayerKind kind;
  int c = 0;
  int h = 1;
  int w = 1;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride_h = 0;
  int stride_w = 0;

  bool same_shape(int c2, int h2, int w2) const {
    return c == c2 && h == h2 && w == w2;
  }
};

struct SteeringHeadSpec {
  ScaleTag tag = ScaleTag::kFull;
  int in_h = 0;
  int in_w = 0;
  int width = 64;
  std::vector<LayerTrace> layers;

  std::string name() const;

  // Architectures for the 320x1216 camera, one per scale. Every conv and
  // pool is unpadded; pools use stride equal to their window.
  static SteeringHeadSpec reference(ScaleTag tag);
  // Same layer vocabulary, sized for an arbitrary input (used when the
  // target camera resolution differs from 320x1216).
  static SteeringHeadSpec derive(ScaleTag tag, int in_h, int in_w,
                                 int width = 64);
  // reference() when (in_h, in_w) is the reference input for `tag`,
  // derive() otherwise.
  static SteeringHeadSpec for_input(ScaleTag tag, int in_h, int in_w,
                                    int width = 64);
};

// Builds the trace of a head from its conv/pool plan. `plan` holds only
// kConv and kMaxPool entries (kernel and stride set); BatchNorm+ReLU follow
// every conv and the Flatten-Linear(25)-ReLU-Linear(1) tail is appended.
SteeringHeadSpec build_head_spec(ScaleTag tag, int in_h, int in_w, int width,
                                 const std::vector<LayerTrace>& plan);

class SteeringHead : public nn::Module {
 public:
  SteeringHead(SteeringHeadSpec spec, nn::Rng& rng);

  // steer_feature: N x 4 x in_h x in_w -> N x 1 x 1 x 1 normalized angle.
  // When `trace` is non-null the shape after every layer is appended.
  Tensor forward(const Tensor& steer_feature,
                 std::vector<LayerTrace>* trace = nullptr);
  const SteeringHeadSpec& spec() const { return spec_; }

 private:
  SteeringHeadSpec spec_;
  std::vector<std::shared_ptr<nn::Conv2d>> convs_;
  std::vector<std::shared_ptr<nn::BatchNorm2d>> norms_;
  std::shared_ptr<nn::Linear> fc1_;
  std::shared_ptr<nn::Linear> fc2_;
};

// Conv(4->4, 3x3, same) -> BatchNorm -> ReLU -> Conv(4->1, 3x3, same).
class SteeringFeatureSegHead : public nn::Module {
 public:
  explicit SteeringFeatureSegHead(nn::Rng& rng);
  Tensor forward(const Tensor& steer_feature);
  nn::Conv2d& conv1() { return *conv1_; }
  nn::Conv2d& conv2() { return *conv2_; }
  nn::BatchNorm2d& norm() { return *bn_; }

 private:
  std::shared_ptr<nn::Conv2d> conv1_;
  std::shared_ptr<nn::BatchNorm2d> bn_;
  std::shared_ptr<nn::Conv2d> conv2_;
};

// Upsamples levels 1 and 2 to level-0 size, concatenates, projects to one
// logit channel and resizes to the input resolution.
class AuxSegHead : public nn::Module {
 public:
  AuxSegHead(const std::vector<int>& level_channels, int width, nn::Rng& rng);
  Tensor forward(std::span<const Tensor> levels, int out_h, int out_w);

 private:
  std::shared_ptr<nn::ConvBnRelu> fuse_;
  std::shared_ptr<nn::Conv2d> classify_;
};

}  // namespace roadmtl
