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

#include "roadmtl/visualize.hpp"

#include <algorithm>
#include <cmath>

#include "roadmtl/error.hpp"

namespace roadmtl {

namespace {

// One channel of the feature map as a 3-channel image, so the shared
// bilinear resize can be reused.
Image channel_plane(const Tensor& features, int n, int channel) {
  const Shape& s = features.shape();
  Image plane = Image::zeros(s.h, s.w);
  const auto v = features.data();
  const std::size_t base = (static_cast<std::size_t>(n) * s.c + channel) * s.plane();
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      plane.at(0, y, x) = v[base + static_cast<std::size_t>(y) * s.w + x];
  return plane;
}

}  // namespace

Image feature_overlay(const Image& image, const Tensor& features, int n,
                      int channel) {
  const Shape& s = features.shape();
  if (n < 0 || n >= s.n || channel < 0 || channel >= s.c) {
    throw ShapeError("overlay index (" + std::to_string(n) + ", " +
                     std::to_string(channel) + ") outside " + s.str());
  }
  const Image plane = resize_image(channel_plane(features, n, channel), image.h, image.w);
  double max_abs = 0.0;
  for (int y = 0; y < image.h; ++y)
    for (int x = 0; x < image.w; ++x)
      max_abs = std::max(max_abs, std::fabs(plane.at(0, y, x)));
  Image out = image;
  if (max_abs == 0.0) return out;
  for (int y = 0; y < image.h; ++y) {
    for (int x = 0; x < image.w; ++x) {
      const double v = plane.at(0, y, x) / max_abs;
      const Rgb& colour = v >= 0.0 ? kPositiveColour : kNegativeColour;
      const double a = kOverlayAlpha * std::fabs(v);
      for (int c = 0; c < 3; ++c)
        out.at(c, y, x) = (1.0 - a) * image.at(c, y, x) + a * colour[c];
    }
  }
  return out;
}

Image mask_overlay(const Image& image, const Mask& mask, const Rgb& colour) {
  if (mask.h != image.h || mask.w != image.w)
    throw ShapeError("mask and image sizes differ");
  Image out = image;
  for (int y = 0; y < image.h; ++y)
    for (int x = 0; x < image.w; ++x) {
      if (!mask.at(y, x)) continue;
      for (int c = 0; c < 3; ++c)
        out.at(c, y, x) = (1.0 - kOverlayAlpha) * image.at(c, y, x) +
                          kOverlayAlpha * colour[c];
    }
  return out;
}

}  // namespace roadmtl
