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

#include "roadmtl/backbone.hpp"

#include <algorithm>

#include "roadmtl/error.hpp"

namespace roadmtl {

namespace {
constexpr std::array<int, 4> kPyramidBottomUp{16, 32, 64, 128};
constexpr int kPyramidWidth = 128;
}  // namespace

std::string to_string(BackboneKind kind) {
  switch (kind) {
    case BackboneKind::kReferenceTiny: return "reference_tiny";
    case BackboneKind::kPyramid128: return "pyramid_128";
    case BackboneKind::kCustom: return "custom";
  }
  return "?";
}

BackboneKind parse_backbone_kind(const std::string& s) {
  if (s == "reference_tiny") return BackboneKind::kReferenceTiny;
  if (s == "pyramid_128") return BackboneKind::kPyramid128;
  if (s == "custom") return BackboneKind::kCustom;
  throw ConfigError("unknown backbone kind '" + s + "'");
}

void BackboneConfig::validate() const {
  if (channels.size() != 4) {
    throw ConfigError("backbone needs 4 channel counts, got " +
                      std::to_string(channels.size()));
  }
  if (std::any_of(channels.begin(), channels.end(),
                  [](int c) { return c <= 0; })) {
    throw ConfigError("backbone channel counts must be positive");
  }
  if (kind == BackboneKind::kPyramid128 &&
      std::any_of(channels.begin(), channels.end(),
                  [](int c) { return c != kPyramidWidth; })) {
    throw ConfigError("pyramid_128 backbone has 128 channels per level");
  }
  if (kind == BackboneKind::kCustom && !weights_path) {
    throw ConfigError("custom backbone requires weights_path");
  }
  if (!(norm_std > 0.0)) throw ConfigError("norm_std must be positive");
}

std::pair<int, int> pyramid_level_size(int input_h, int input_w, int level) {
  return {(input_h / 4) >> level, (input_w / 4) >> level};
}

Tensor normalize_image(const Tensor& image, double mean, double std) {
  const double inv = 1.0 / std;
  std::vector<double> v(image.data().begin(), image.data().end());
  for (double& x : v) x = (x - mean) * inv;
  return make_result(image.shape(), std::move(v), {image},
                     [inv](detail::Node& self) {
                       double* gx = self.input_grad(0);
                       for (std::size_t i = 0; i < self.grad.size(); ++i)
                         gx[i] += self.grad[i] * inv;
                     });
}

Backbone::Backbone(const BackboneConfig& config, nn::Rng& rng)
    : config_(config) {
  config_.validate();
  const bool fpn = config_.kind == BackboneKind::kPyramid128;
  std::array<int, 4> widths{};
  for (int i = 0; i < 4; ++i)
    widths[i] = fpn ? kPyramidBottomUp[i] : config_.channels[i];

  stem_ = register_module("stem",
                          std::make_shared<nn::ConvBnRelu>(3, widths[0], 3, rng, 2));
  int in = widths[0];
  for (int i = 0; i < 4; ++i) {
    stages_[i] = register_module(
        "stage" + std::to_string(i),
        std::make_shared<nn::ConvBnRelu>(in, widths[i], 3, rng, 2));
    in = widths[i];
  }
  if (fpn) {
    for (int i = 0; i < 4; ++i) {
      lateral_[i] = register_module(
          "lateral" + std::to_string(i),
          std::make_shared<nn::Conv2d>(
              nn::Conv2dSpec{widths[i], kPyramidWidth, 1, 1, 1, 1, 0, 0, true},
              rng));
      smooth_[i] = register_module(
          "smooth" + std::to_string(i),
          std::make_shared<nn::ConvBnRelu>(kPyramidWidth, kPyramidWidth, 3, rng));
    }
  }
}

FeaturePyramid Backbone::forward(const Tensor& image) {
  const Shape& s = image.shape();
  if (s.c != 3) {
    throw ShapeError("backbone expects 3 input channels, got " +
                     std::to_string(s.c));
  }
  if (s.h % 32 != 0) {
    throw ShapeError("input height " + std::to_string(s.h) +
                     " is not divisible by 32");
  }
  if (s.w % 32 != 0) {
    throw ShapeError("input width " + std::to_string(s.w) +
                     " is not divisible by 32");
  }
  FeaturePyramid p;
  p.input_h = s.h;
  p.input_w = s.w;
  Tensor x = stem_->forward(image);
  std::array<Tensor, 4> bottom_up;
  for (int i = 0; i < 4; ++i) {
    x = stages_[i]->forward(x);
    bottom_up[i] = x;
  }
  if (config_.kind != BackboneKind::kPyramid128) {
    p.levels = bottom_up;
    return p;
  }
  Tensor top = lateral_[3]->forward(bottom_up[3]);
  p.levels[3] = smooth_[3]->forward(top);
  for (int i = 2; i >= 0; --i) {
    const Shape& ls = bottom_up[i].shape();
    top = ops::add(lateral_[i]->forward(bottom_up[i]),
                   ops::upsample_bilinear(top, ls.h, ls.w));
    p.levels[i] = smooth_[i]->forward(top);
  }
  return p;
}

FeaturePyramid extract_pyramid(const Tensor& normalized_image,
                               Backbone& backbone) {
  FeaturePyramid p = backbone.forward(normalized_image);
  for (int i = 0; i < 4; ++i) {
    const Shape& ls = p.levels[i].shape();
    const auto [h, w] = pyramid_level_size(p.input_h, p.input_w, i);
    if (ls.h != h || ls.w != w) {
      throw ShapeError("pyramid level " + std::to_string(i) + " is " +
                       ls.str() + ", expected spatial " + std::to_string(h) +
                       "x" + std::to_string(w));
    }
    if (ls.c != backbone.channels()[i]) {
      throw ConfigError("pyramid level " + std::to_string(i) + " has " +
                        std::to_string(ls.c) + " channels, config says " +
                        std::to_string(backbone.channels()[i]));
    }
  }
  return p;
}

}  // namespace roadmtl
