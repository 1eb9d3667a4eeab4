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

// Multi-scale feature extractors. Any backbone produces four feature maps at
// 1/4, 1/8, 1/16 and 1/32 of the input resolution.

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roadmtl/nn.hpp"

namespace roadmtl {

enum class BackboneKind { kReferenceTiny, kPyramid128, kCustom };

struct BackboneConfig {
  BackboneKind kind = BackboneKind::kReferenceTiny;
  std::vector<int> channels{8, 8, 8, 8};
  std::optional<std::string> weights_path;
  double norm_mean = 0.5;
  double norm_std = 0.5;

  // Throws ConfigError when the invariants do not hold.
  void validate() const;
};

std::string to_string(BackboneKind kind);
BackboneKind parse_backbone_kind(const std::string& s);

struct FeaturePyramid {
  std::array<Tensor, 4> levels;
  int input_h = 0;
  int input_w = 0;
};

// Expected (h, w) of pyramid level i for an input of size (h, w).
std::pair<int, int> pyramid_level_size(int input_h, int input_w, int level);

// Per-channel (x - mean) / std.
Tensor normalize_image(const Tensor& image, double mean, double std);

class Backbone : public nn::Module {
 public:
  Backbone(const BackboneConfig& config, nn::Rng& rng);

  // `image` is N x 3 x H x W, already normalized. H and W must be multiples
  // of 32.
  FeaturePyramid forward(const Tensor& image);
  const BackboneConfig& config() const { return config_; }
  const std::vector<int>& channels() const { return config_.channels; }

 private:
  BackboneConfig config_;
  std::shared_ptr<nn::ConvBnRelu> stem_;
  std::array<std::shared_ptr<nn::ConvBnRelu>, 4> stages_;
  // Feature-pyramid top-down path (pyramid_128 only).
  std::array<std::shared_ptr<nn::Conv2d>, 4> lateral_;
  std::array<std::shared_ptr<nn::ConvBnRelu>, 4> smooth_;
};

FeaturePyramid extract_pyramid(const Tensor& normalized_image,
                               Backbone& backbone);

}  // namespace roadmtl
