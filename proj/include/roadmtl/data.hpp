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

// Images, masks and the preprocessing / augmentation operations of the
// source and target pipelines.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadmtl/nn.hpp"
#include "roadmtl/tensor.hpp"
#include "roadmtl/types.hpp"

namespace roadmtl {

// 3 x H x W, channel-major, RGB values in [0, 1].
struct Image {
  int h = 0;
  int w = 0;
  std::vector<double> data;

  static Image zeros(int h, int w) {
    return Image{h, w, std::vector<double>(3 * static_cast<std::size_t>(h) * w)};
  }
  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * h + y) * w + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * h + y) * w + x];
  }
  bool operator==(const Image&) const = default;
};

// Binary road mask, H x W, values 0 or 1.
struct Mask {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> data;

  static Mask zeros(int h, int w) {
    return Mask{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w)};
  }
  std::uint8_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * w + x];
  }
  std::uint8_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * w + x];
  }
  std::size_t count() const;
  bool operator==(const Mask&) const = default;
};

// Integer class-id map, H x W.
struct LabelMap {
  int h = 0;
  int w = 0;
  std::vector<std::int32_t> data;
};

struct Sample {
  Image image;
  std::optional<Mask> road_mask;
  // Normalized to [-1, 1] by the manifest's max_angle.
  std::optional<double> steer_angle;
  DatasetKind kind = DatasetKind::kSource;
  std::string id;
};

// Class ids merged into "road": road, lane marking (general and zebra),
// service lane, crosswalk, parking, rail track, manhole, pothole.
const std::vector<int>& default_drivable_ids();

Mask merge_road_classes(const LabelMap& labels, std::span<const int> drivable_ids);

double road_fraction(const Mask& mask);
// True when the sample is kept: road fraction >= min_fraction.
bool keep_by_road_fraction(const Mask& mask, double min_fraction = 0.05);

// Drops rows 0 .. floor(H/4) - 1 of the image and, when given, the mask.
void crop_top_quarter(Image& image, Mask* mask);

Image resize_image(const Image& image, int h, int w);
Mask resize_mask(const Mask& mask, int h, int w);
Image crop_image(const Image& image, int y, int x, int h, int w);
Mask crop_mask(const Mask& mask, int y, int x, int h, int w);
Image flip_image(const Image& image);
Mask flip_mask(const Mask& mask);

struct ScaleJitter {
  bool enabled = true;
  double min_scale = 0.8;
  double max_scale = 1.2;
};

// Resizes to (out_h, out_w), applies a random scale from the jitter range and
// crops a random out_h x out_w window. Image bilinear, mask nearest.
void resize_and_random_crop(Image& image, Mask* mask, int out_h, int out_w,
                            const ScaleJitter& jitter, nn::Rng& rng);

// With probability p mirrors the image (and mask) and negates the angle.
// Returns whether the flip happened.
bool flip_augment(Image& image, double& angle, nn::Rng& rng, double p = 0.5,
                  Mask* mask = nullptr);

struct PhotometricConfig {
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  double max_blur_sigma = 1.0;

  static PhotometricConfig none() { return {0.0, 0.0, 0.0, 0.0}; }
};

void photometric_augment(Image& image, const PhotometricConfig& config,
                         nn::Rng& rng);
void gaussian_blur(Image& image, double sigma);

// Batch assembly. Masks become N x 1 x H x W of 0/1 and angles N x 1 x 1 x 1.
Tensor image_batch(std::span<const Image* const> images);
Tensor mask_batch(std::span<const Mask* const> masks);
Tensor angle_batch(std::span<const double> angles);

// Thresholds N x 1 x H x W probabilities/logits into per-sample masks.
std::vector<Mask> masks_from_logits(const Tensor& logits, double threshold = 0.5);

// PNG I/O. Masks are 8-bit grayscale 0/255 (read back with > 127).
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);
Mask read_mask(const std::string& path);
void write_mask(const std::string& path, const Mask& mask);
LabelMap read_label_map(const std::string& path);
void write_label_map(const std::string& path, const LabelMap& labels);

}  // namespace roadmtl
