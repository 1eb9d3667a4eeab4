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

#include "roadmtl/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "roadmtl/error.hpp"

namespace roadmtl {

namespace {

// CHW doubles <-> HWC CV_64FC3 (RGB order kept).
cv::Mat to_mat(const Image& image) {
  cv::Mat m(image.h, image.w, CV_64FC3);
  for (int y = 0; y < image.h; ++y) {
    auto* row = m.ptr<cv::Vec3d>(y);
    for (int x = 0; x < image.w; ++x)
      for (int c = 0; c < 3; ++c) row[x][c] = image.at(c, y, x);
  }
  return m;
}

Image from_mat(const cv::Mat& m) {
  Image out = Image::zeros(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3d>(y);
    for (int x = 0; x < m.cols; ++x)
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = row[x][c];
  }
  return out;
}

void ensure_parent(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_png(const std::string& path, const cv::Mat& m) {
  ensure_parent(path);
  bool ok = false;
  try {
    ok = cv::imwrite(path, m);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + path + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + path);
}

cv::Mat read_png(const std::string& path, int flags) {
  cv::Mat m = cv::imread(path, flags);
  if (m.empty()) throw DataError("cannot read image " + path);
  return m;
}

}  // namespace

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (std::uint8_t v : data) n += v != 0;
  return n;
}

const std::vector<int>& default_drivable_ids() {
  static const std::vector<int> ids{8, 10, 12, 13, 14, 23, 24, 41, 43};
  return ids;
}

Mask merge_road_classes(const LabelMap& labels,
                        std::span<const int> drivable_ids) {
  Mask out = Mask::zeros(labels.h, labels.w);
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    const int v = labels.data[i];
    if (v < 0) {
      throw DataError("label map holds negative class id " + std::to_string(v));
    }
    out.data[i] = std::find(drivable_ids.begin(), drivable_ids.end(), v) !=
                  drivable_ids.end();
  }
  return out;
}

double road_fraction(const Mask& mask) {
  if (mask.data.empty()) return 0.0;
  return static_cast<double>(mask.count()) /
         static_cast<double>(mask.data.size());
}

bool keep_by_road_fraction(const Mask& mask, double min_fraction) {
  return road_fraction(mask) >= min_fraction;
}

Image crop_image(const Image& image, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > image.h || x0 + w > image.w) {
    throw ShapeError("crop window outside image");
  }
  Image out = Image::zeros(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = image.at(c, y0 + y, x0 + x);
  return out;
}

Mask crop_mask(const Mask& mask, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > mask.h || x0 + w > mask.w) {
    throw ShapeError("crop window outside mask");
  }
  Mask out = Mask::zeros(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(y, x) = mask.at(y0 + y, x0 + x);
  return out;
}

void crop_top_quarter(Image& image, Mask* mask) {
  const int top = image.h / 4;
  image = crop_image(image, top, 0, image.h - top, image.w);
  if (mask) {
    if (mask->h != image.h + top || mask->w != image.w)
      throw ShapeError("mask and image sizes differ");
    *mask = crop_mask(*mask, top, 0, mask->h - top, mask->w);
  }
}

Image resize_image(const Image& image, int h, int w) {
  if (image.h == h && image.w == w) return image;
  cv::Mat out;
  cv::resize(to_mat(image), out, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
  return from_mat(out);
}

Mask resize_mask(const Mask& mask, int h, int w) {
  if (mask.h == h && mask.w == w) return mask;
  Mask out = Mask::zeros(h, w);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(mask.h - 1, static_cast<int>(
                                            std::floor((y + 0.5) * mask.h / h)));
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(
          mask.w - 1, static_cast<int>(std::floor((x + 0.5) * mask.w / w)));
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

Image flip_image(const Image& image) {
  Image out = image;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < image.h; ++y)
      for (int x = 0; x < image.w; ++x)
        out.at(c, y, x) = image.at(c, y, image.w - 1 - x);
  return out;
}

Mask flip_mask(const Mask& mask) {
  Mask out = mask;
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) out.at(y, x) = mask.at(y, mask.w - 1 - x);
  return out;
}

void resize_and_random_crop(Image& image, Mask* mask, int out_h, int out_w,
                            const ScaleJitter& jitter, nn::Rng& rng) {
  double s = 1.0;
  if (jitter.enabled) {
    std::uniform_real_distribution<double> d(jitter.min_scale, jitter.max_scale);
    s = d(rng);
  }
  const int h = std::max(out_h, static_cast<int>(std::lround(out_h * s)));
  const int w = std::max(out_w, static_cast<int>(std::lround(out_w * s)));
  image = resize_image(image, h, w);
  if (mask) *mask = resize_mask(*mask, h, w);
  int y0 = 0, x0 = 0;
  if (h > out_h) y0 = std::uniform_int_distribution<int>(0, h - out_h)(rng);
  if (w > out_w) x0 = std::uniform_int_distribution<int>(0, w - out_w)(rng);
  image = crop_image(image, y0, x0, out_h, out_w);
  if (mask) *mask = crop_mask(*mask, y0, x0, out_h, out_w);
}

bool flip_augment(Image& image, double& angle, nn::Rng& rng, double p,
                  Mask* mask) {
  const bool flip = std::bernoulli_distribution(p)(rng);
  if (flip) {
    image = flip_image(image);
    angle = -angle;
    if (mask) *mask = flip_mask(*mask);
  }
  return flip;
}

void gaussian_blur(Image& image, double sigma) {
  if (sigma <= 0.0) return;
  cv::Mat out;
  cv::GaussianBlur(to_mat(image), out, cv::Size(0, 0), sigma, sigma,
                   cv::BORDER_REFLECT101);
  image = from_mat(out);
}

void photometric_augment(Image& image, const PhotometricConfig& config,
                         nn::Rng& rng) {
  auto factor = [&rng](double strength) {
    if (strength <= 0.0) return 1.0;
    return std::uniform_real_distribution<double>(1.0 - strength,
                                                  1.0 + strength)(rng);
  };
  const double b = factor(config.brightness);
  const double c = factor(config.contrast);
  const double s = factor(config.saturation);
  double sigma = 0.0;
  if (config.max_blur_sigma > 0.0) {
    sigma = std::uniform_real_distribution<double>(0.0, config.max_blur_sigma)(rng);
  }
  const std::size_t plane = static_cast<std::size_t>(image.h) * image.w;
  double* r = image.data.data();
  double* g = r + plane;
  double* bl = g + plane;
  if (b != 1.0) {
    for (double& v : image.data) v *= b;
  }
  if (c != 1.0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < plane; ++i)
      mean += 0.299 * r[i] + 0.587 * g[i] + 0.114 * bl[i];
    mean /= static_cast<double>(plane);
    for (double& v : image.data) v = mean + c * (v - mean);
  }
  if (s != 1.0) {
    for (std::size_t i = 0; i < plane; ++i) {
      const double gray = 0.299 * r[i] + 0.587 * g[i] + 0.114 * bl[i];
      r[i] = gray + s * (r[i] - gray);
      g[i] = gray + s * (g[i] - gray);
      bl[i] = gray + s * (bl[i] - gray);
    }
  }
  for (double& v : image.data) v = std::clamp(v, 0.0, 1.0);
  gaussian_blur(image, sigma);
}

Tensor image_batch(std::span<const Image* const> images) {
  if (images.empty()) throw ContractError("empty image batch");
  const int h = images[0]->h, w = images[0]->w;
  std::vector<double> v;
  v.reserve(images.size() * 3 * static_cast<std::size_t>(h) * w);
  for (const Image* im : images) {
    if (im->h != h || im->w != w)
      throw ShapeError("images in a batch must share their size");
    v.insert(v.end(), im->data.begin(), im->data.end());
  }
  return Tensor::from({static_cast<int>(images.size()), 3, h, w}, std::move(v));
}

Tensor mask_batch(std::span<const Mask* const> masks) {
  if (masks.empty()) throw ContractError("empty mask batch");
  const int h = masks[0]->h, w = masks[0]->w;
  std::vector<double> v;
  v.reserve(masks.size() * static_cast<std::size_t>(h) * w);
  for (const Mask* m : masks) {
    if (m->h != h || m->w != w)
      throw ShapeError("masks in a batch must share their size");
    for (std::uint8_t b : m->data) v.push_back(b ? 1.0 : 0.0);
  }
  return Tensor::from({static_cast<int>(masks.size()), 1, h, w}, std::move(v));
}

Tensor angle_batch(std::span<const double> angles) {
  if (angles.empty()) throw ContractError("empty angle batch");
  return Tensor::from({static_cast<int>(angles.size()), 1, 1, 1},
                      std::vector<double>(angles.begin(), angles.end()));
}

std::vector<Mask> masks_from_logits(const Tensor& logits, double threshold) {
  const Shape& s = logits.shape();
  if (s.c != 1) throw ShapeError("expected 1-channel logits, got " + s.str());
  // sigmoid(x) > t  <=>  x > log(t / (1 - t))
  const double cut = std::log(threshold / (1.0 - threshold));
  std::vector<Mask> out;
  const auto v = logits.data();
  for (int n = 0; n < s.n; ++n) {
    Mask m = Mask::zeros(s.h, s.w);
    for (std::size_t i = 0; i < s.plane(); ++i)
      m.data[i] = v[n * s.plane() + i] > cut;
    out.push_back(std::move(m));
  }
  return out;
}

Image read_image(const std::string& path) {
  cv::Mat bgr = read_png(path, cv::IMREAD_COLOR);
  Image out = Image::zeros(bgr.rows, bgr.cols);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x)
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = row[x][2 - c] / 255.0;
  }
  return out;
}

void write_image(const std::string& path, const Image& image) {
  cv::Mat bgr(image.h, image.w, CV_8UC3);
  for (int y = 0; y < image.h; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.w; ++x)
      for (int c = 0; c < 3; ++c)
        row[x][2 - c] = static_cast<std::uint8_t>(
            std::lround(std::clamp(image.at(c, y, x), 0.0, 1.0) * 255.0));
  }
  write_png(path, bgr);
}

Mask read_mask(const std::string& path) {
  cv::Mat g = read_png(path, cv::IMREAD_GRAYSCALE);
  Mask out = Mask::zeros(g.rows, g.cols);
  for (int y = 0; y < g.rows; ++y) {
    const auto* row = g.ptr<std::uint8_t>(y);
    for (int x = 0; x < g.cols; ++x) out.at(y, x) = row[x] > 127;
  }
  return out;
}

void write_mask(const std::string& path, const Mask& mask) {
  cv::Mat g(mask.h, mask.w, CV_8UC1);
  for (int y = 0; y < mask.h; ++y) {
    auto* row = g.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.w; ++x) row[x] = mask.at(y, x) ? 255 : 0;
  }
  write_png(path, g);
}

LabelMap read_label_map(const std::string& path) {
  cv::Mat m = read_png(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  if (m.channels() != 1 || (m.depth() != CV_8U && m.depth() != CV_16U)) {
    throw DataError("label map " + path +
                    " must be single-channel 8- or 16-bit");
  }
  LabelMap out{m.rows, m.cols,
               std::vector<std::int32_t>(static_cast<std::size_t>(m.rows) *
                                         m.cols)};
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x)
      out.data[static_cast<std::size_t>(y) * m.cols + x] =
          m.depth() == CV_8U ? m.at<std::uint8_t>(y, x)
                             : m.at<std::uint16_t>(y, x);
  return out;
}

void write_label_map(const std::string& path, const LabelMap& labels) {
  cv::Mat m(labels.h, labels.w, CV_16UC1);
  for (int y = 0; y < labels.h; ++y)
    for (int x = 0; x < labels.w; ++x) {
      const int v = labels.data[static_cast<std::size_t>(y) * labels.w + x];
      if (v < 0 || v > 65535) throw DataError("class id out of 16-bit range");
      m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(v);
    }
  write_png(path, m);
}

}  // namespace roadmtl
