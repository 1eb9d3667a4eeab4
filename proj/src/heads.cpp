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

#include "roadmtl/heads.hpp"

#include <algorithm>

#include "roadmtl/error.hpp"

namespace roadmtl {

namespace {

constexpr int kHiddenFeatures = 25;

LayerTrace conv(int kh, int kw, int stride) {
  return LayerTrace{LayerKind::kConv, 0, 0, 0, kh, kw, stride, stride};
}

LayerTrace pool(int kh, int kw) {
  return LayerTrace{LayerKind::kMaxPool, 0, 0, 0, kh, kw, kh, kw};
}

struct ReferenceInput {
  int h;
  int w;
};

ReferenceInput reference_input(ScaleTag tag) {
  switch (tag) {
    case ScaleTag::kFull: return {320, 1216};
    case ScaleTag::kS4: return {80, 304};
    case ScaleTag::kS8: return {40, 152};
    case ScaleTag::kS16: return {20, 76};
    case ScaleTag::kS32: return {10, 38};
  }
  return {0, 0};
}

}  // namespace

std::string to_string(ScaleTag tag) {
  switch (tag) {
    case ScaleTag::kFull: return "1/1";
    case ScaleTag::kS4: return "1/4";
    case ScaleTag::kS8: return "1/8";
    case ScaleTag::kS16: return "1/16";
    case ScaleTag::kS32: return "1/32";
  }
  return "?";
}

ScaleTag scale_tag_for_level(int level) {
  static constexpr ScaleTag kTags[] = {ScaleTag::kS4, ScaleTag::kS8,
                                       ScaleTag::kS16, ScaleTag::kS32};
  if (level < 0 || level > 3)
    throw ContractError("no pyramid level " + std::to_string(level));
  return kTags[level];
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "Conv2D";
    case LayerKind::kBatchNorm: return "BatchNorm2D";
    case LayerKind::kRelu: return "ReLU";
    case LayerKind::kMaxPool: return "MaxPool2D";
    case LayerKind::kFlatten: return "Flatten";
    case LayerKind::kLinear: return "Linear";
  }
  return "?";
}

std::string SteeringHeadSpec::name() const {
  return "steering head " + to_string(tag) + " (4," + std::to_string(in_h) +
         "," + std::to_string(in_w) + ")";
}

SteeringHeadSpec build_head_spec(ScaleTag tag, int in_h, int in_w, int width,
                                 const std::vector<LayerTrace>& plan) {
  SteeringHeadSpec spec;
  spec.tag = tag;
  spec.in_h = in_h;
  spec.in_w = in_w;
  spec.width = width;
  int c = kSteerFeatureChannels, h = in_h, w = in_w;
  for (const LayerTrace& step : plan) {
    const int nh = ops::conv_out_size(h, step.kernel_h, step.stride_h, 0);
    const int nw = ops::conv_out_size(w, step.kernel_w, step.stride_w, 0);
    if (nh <= 0 || nw <= 0) {
      throw ShapeError("steering head plan does not fit input (4," +
                       std::to_string(in_h) + "," + std::to_string(in_w) + ")");
    }
    h = nh;
    w = nw;
    LayerTrace row = step;
    if (step.kind == LayerKind::kConv) c = width;
    row.c = c;
    row.h = h;
    row.w = w;
    spec.layers.push_back(row);
    if (step.kind == LayerKind::kConv) {
      spec.layers.push_back({LayerKind::kBatchNorm, c, h, w});
      spec.layers.push_back({LayerKind::kRelu, c, h, w});
    }
  }
  const int flat = c * h * w;
  spec.layers.push_back({LayerKind::kFlatten, flat});
  spec.layers.push_back({LayerKind::kLinear, kHiddenFeatures});
  spec.layers.push_back({LayerKind::kRelu, kHiddenFeatures});
  spec.layers.push_back({LayerKind::kLinear, 1});
  return spec;
}

SteeringHeadSpec SteeringHeadSpec::reference(ScaleTag tag) {
  const ReferenceInput in = reference_input(tag);
  std::vector<LayerTrace> plan;
  switch (tag) {
    case ScaleTag::kFull:
      plan = {conv(5, 5, 2), pool(3, 3), conv(5, 5, 2), pool(2, 2),
              conv(3, 3, 1), pool(2, 2), conv(3, 3, 1), conv(3, 3, 1)};
      break;
    case ScaleTag::kS4:
      plan = {conv(5, 5, 2), pool(2, 2), conv(5, 5, 2), pool(2, 2),
              conv(3, 3, 1), conv(2, 3, 1)};
      break;
    case ScaleTag::kS8:
      plan = {conv(5, 5, 2), pool(2, 3),    conv(3, 3, 1),
              conv(3, 3, 1), conv(3, 3, 1), conv(3, 3, 1)};
      break;
    case ScaleTag::kS16:
      plan = {conv(5, 5, 2), conv(3, 3, 1), conv(3, 3, 1), conv(3, 3, 1),
              conv(2, 3, 1)};
      break;
    case ScaleTag::kS32:
      plan = {conv(3, 3, 1), conv(3, 3, 1), conv(3, 3, 1), conv(3, 3, 1),
              conv(2, 3, 1)};
      break;
  }
  return build_head_spec(tag, in.h, in.w, 64, plan);
}

SteeringHeadSpec SteeringHeadSpec::derive(ScaleTag tag, int in_h, int in_w,
                                          int width) {
  if (in_h <= 0 || in_w <= 0) {
    throw ShapeError("steering head input must be non-empty");
  }
  std::vector<LayerTrace> plan;
  int h = in_h, w = in_w;
  while (h >= 12 && w >= 12) {
    plan.push_back(conv(5, 5, 2));
    h = (h - 5) / 2 + 1;
    w = (w - 5) / 2 + 1;
  }
  while (h > 2 && w >= 3) {
    plan.push_back(conv(3, 3, 1));
    h -= 2;
    w -= 2;
  }
  if (h > 1 || plan.empty()) {
    const int kw = std::min(3, w);
    plan.push_back(LayerTrace{LayerKind::kConv, 0, 0, 0, h, kw, 1, 1});
  }
  return build_head_spec(tag, in_h, in_w, width, plan);
}

SteeringHeadSpec SteeringHeadSpec::for_input(ScaleTag tag, int in_h, int in_w,
                                             int width) {
  const ReferenceInput ref = reference_input(tag);
  if (ref.h == in_h && ref.w == in_w && width == 64) return reference(tag);
  return derive(tag, in_h, in_w, width);
}

SteeringHead::SteeringHead(SteeringHeadSpec spec, nn::Rng& rng)
    : spec_(std::move(spec)) {
  int in = kSteerFeatureChannels;
  int flat = 0;
  for (const LayerTrace& row : spec_.layers) {
    if (row.kind == LayerKind::kConv) {
      const std::size_t i = convs_.size();
      convs_.push_back(register_module(
          "conv" + std::to_string(i),
          std::make_shared<nn::Conv2d>(
              nn::Conv2dSpec{in, row.c, row.kernel_h, row.kernel_w,
                             row.stride_h, row.stride_w, 0, 0, false},
              rng)));
      norms_.push_back(register_module(
          "bn" + std::to_string(i), std::make_shared<nn::BatchNorm2d>(row.c)));
      in = row.c;
    } else if (row.kind == LayerKind::kFlatten) {
      flat = row.c;
    }
  }
  fc1_ = register_module("fc1",
                         std::make_shared<nn::Linear>(flat, kHiddenFeatures, rng));
  fc2_ = register_module("fc2", std::make_shared<nn::Linear>(kHiddenFeatures, 1, rng));
}

Tensor SteeringHead::forward(const Tensor& steer_feature,
                             std::vector<LayerTrace>* trace) {
  const Shape& s = steer_feature.shape();
  if (s.c != kSteerFeatureChannels || s.h != spec_.in_h || s.w != spec_.in_w) {
    throw ShapeError(spec_.name() + " got input " + s.str());
  }
  auto record = [&](const LayerTrace& row, const Tensor& t) {
    if (!trace) return;
    LayerTrace r = row;
    const Shape& ts = t.shape();
    r.c = ts.c;
    r.h = ts.h;
    r.w = ts.w;
    trace->push_back(r);
  };
  Tensor x = steer_feature;
  std::size_t conv_index = 0;
  for (const LayerTrace& row : spec_.layers) {
    switch (row.kind) {
      case LayerKind::kConv:
        x = convs_[conv_index]->forward(x);
        break;
      case LayerKind::kBatchNorm:
        x = norms_[conv_index++]->forward(x);
        break;
      case LayerKind::kRelu:
        x = ops::relu(x);
        break;
      case LayerKind::kMaxPool:
        x = ops::max_pool2d(x, row.kernel_h, row.kernel_w, row.stride_h,
                            row.stride_w);
        break;
      case LayerKind::kFlatten:
        x = ops::flatten(x);
        break;
      case LayerKind::kLinear:
        x = (row.c == 1 ? fc2_ : fc1_)->forward(x);
        break;
    }
    record(row, x);
  }
  return x;
}

SteeringFeatureSegHead::SteeringFeatureSegHead(nn::Rng& rng) {
  conv1_ = register_module(
      "conv1", std::make_shared<nn::Conv2d>(
                   nn::same_conv(kSteerFeatureChannels, kSteerFeatureChannels,
                                 3, false),
                   rng));
  bn_ = register_module("bn",
                        std::make_shared<nn::BatchNorm2d>(kSteerFeatureChannels));
  conv2_ = register_module(
      "conv2", std::make_shared<nn::Conv2d>(
                   nn::same_conv(kSteerFeatureChannels, 1, 3, true), rng));
}

Tensor SteeringFeatureSegHead::forward(const Tensor& steer_feature) {
  if (steer_feature.shape().c != kSteerFeatureChannels) {
    throw ShapeError("steering feature segmentation head expects 4 channels, "
                     "got " + std::to_string(steer_feature.shape().c));
  }
  return conv2_->forward(
      ops::relu(bn_->forward(conv1_->forward(steer_feature))));
}

AuxSegHead::AuxSegHead(const std::vector<int>& level_channels, int width,
                       nn::Rng& rng) {
  if (level_channels.size() < 3)
    throw ContractError("auxiliary head needs 3 level widths");
  const int in = level_channels[0] + level_channels[1] + level_channels[2];
  fuse_ = register_module("fuse", std::make_shared<nn::ConvBnRelu>(in, width, 3, rng));
  classify_ = register_module(
      "classify",
      std::make_shared<nn::Conv2d>(
          nn::Conv2dSpec{width, 1, 1, 1, 1, 1, 0, 0, true}, rng));
}

Tensor AuxSegHead::forward(std::span<const Tensor> levels, int out_h,
                           int out_w) {
  if (levels.size() < 3) {
    throw ContractError("auxiliary segmentation head needs the 3 finest "
                        "levels, got " + std::to_string(levels.size()));
  }
  const Shape& s0 = levels[0].shape();
  Tensor cat = ops::concat_channels(
      {levels[0], ops::upsample_bilinear(levels[1], s0.h, s0.w),
       ops::upsample_bilinear(levels[2], s0.h, s0.w)});
  Tensor logits = classify_->forward(fuse_->forward(cat));
  return ops::upsample_bilinear(logits, out_h, out_w);
}

}  // namespace roadmtl
