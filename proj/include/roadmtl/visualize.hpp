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

// Overlay rendering for steering features and segmentation masks.

#pragma once

#include <array>

#include "roadmtl/data.hpp"
#include "roadmtl/tensor.hpp"

namespace roadmtl {

using Rgb = std::array<double, 3>;

inline constexpr Rgb kPositiveColour{1.0, 0.0, 0.0};
inline constexpr Rgb kNegativeColour{0.0, 0.0, 1.0};
inline constexpr double kOverlayAlpha = 0.5;

// Channel `channel` of sample `n` of an N x C x h x w feature map, resized
// bilinearly to the image and normalized by its max |v|. Positive values
// tint red, negative values blue, with alpha 0.5 * |v| / max|v|. A map whose
// max |v| is zero leaves the image unchanged.
Image feature_overlay(const Image& image, const Tensor& features, int n,
                      int channel);

// Mask pixels tinted with `colour` at alpha 0.5.
Image mask_overlay(const Image& image, const Mask& mask, const Rgb& colour);

}  // namespace roadmtl
