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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>

#include "roadmtl/data.hpp"
#include "roadmtl/error.hpp"

namespace roadmtl {
namespace {

constexpr int kRoad = 13;
constexpr int kPothole = 43;
constexpr int kSky = 27;
constexpr int kSidewalk = 15;

Image random_image(int h, int w, std::mt19937_64& rng) {
  Image im = Image::zeros(h, w);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (double& v : im.data) v = d(rng);
  return im;
}

Mask random_mask(int h, int w, std::mt19937_64& rng, double p = 0.5) {
  Mask m = Mask::zeros(h, w);
  std::bernoulli_distribution d(p);
  for (auto& v : m.data) v = d(rng);
  return m;
}

// Image whose pixel (c, y, x) encodes its own coordinates.
Image coordinate_image(int h, int w) {
  Image im = Image::zeros(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) im.at(c, y, x) = c * 1e6 + y * 1e3 + x;
  return im;
}

Mask mask_with_count(int h, int w, std::size_t n) {
  Mask m = Mask::zeros(h, w);
  std::fill_n(m.data.begin(), n, 1);
  return m;
}

TEST(MergeRoadClasses, AllPotholeIsRoad) {
  LabelMap l{4, 5, std::vector<std::int32_t>(20, kPothole)};
  const Mask m = merge_road_classes(l, default_drivable_ids());
  EXPECT_EQ(m.count(), 20u);
}

TEST(MergeRoadClasses, AllSkyIsBackground) {
  LabelMap l{4, 5, std::vector<std::int32_t>(20, kSky)};
  EXPECT_EQ(merge_road_classes(l, default_drivable_ids()).count(), 0u);
}

TEST(MergeRoadClasses, MixedMaskMatchesPixelOracle) {
  std::mt19937_64 rng(3);
  LabelMap l{10, 10, std::vector<std::int32_t>(100, kSky)};
  std::vector<std::size_t> idx(100);
  std::iota(idx.begin(), idx.end(), 0u);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto& ids = default_drivable_ids();
  for (int i = 0; i < 37; ++i) l.data[idx[i]] = ids[i % ids.size()];
  for (int i = 37; i < 60; ++i) l.data[idx[i]] = kSidewalk;
  const Mask m = merge_road_classes(l, ids);
  EXPECT_EQ(m.count(), 37u);
  for (std::size_t i = 0; i < 100; ++i) {
    const bool drivable = std::count(ids.begin(), ids.end(), l.data[i]) > 0;
    EXPECT_EQ(m.data[i], drivable ? 1 : 0);
  }
}

TEST(MergeRoadClasses, EveryConfiguredClassIsDrivable) {
  for (int id : default_drivable_ids()) {
    LabelMap l{1, 1, {id}};
    EXPECT_EQ(merge_road_classes(l, default_drivable_ids()).count(), 1u) << id;
  }
  EXPECT_EQ(default_drivable_ids().size(), 9u);
}

TEST(MergeRoadClasses, NegativeLabelIsDataError) {
  LabelMap l{1, 2, {kRoad, -3}};
  EXPECT_THROW(merge_road_classes(l, default_drivable_ids()), DataError);
}

TEST(RoadFractionFilter, BoundaryIsStrict) {
  EXPECT_FALSE(keep_by_road_fraction(mask_with_count(10, 10, 4)));
  EXPECT_TRUE(keep_by_road_fraction(mask_with_count(10, 10, 5)));
  EXPECT_TRUE(keep_by_road_fraction(mask_with_count(10, 10, 100)));
  EXPECT_FALSE(keep_by_road_fraction(mask_with_count(20, 20, 19)));
  EXPECT_TRUE(keep_by_road_fraction(mask_with_count(20, 20, 20)));
}

TEST(CropTopQuarter, KeepsLowerRows) {
  for (const auto& [h, first] : {std::pair{1000, 250}, std::pair{4, 1},
                                std::pair{7, 1}, std::pair{8, 2}}) {
    Image im = coordinate_image(h, 3);
    Mask m = Mask::zeros(h, 3);
    for (int y = 0; y < h; ++y) m.at(y, 0) = y % 2;
    crop_top_quarter(im, &m);
    ASSERT_EQ(im.h, h - first);
    ASSERT_EQ(m.h, h - first);
    for (int y = 0; y < im.h; ++y) {
      EXPECT_EQ(im.at(1, y, 2), 1e6 + (y + first) * 1e3 + 2);
      EXPECT_EQ(m.at(y, 0), (y + first) % 2);
    }
  }
}

TEST(ResizeAndRandomCrop, OutputSizeAndBinaryMask) {
  std::mt19937_64 rng(5);
  for (const auto& [h, w] : {std::pair{50, 70}, std::pair{96, 128},
                            std::pair{20, 200}}) {
    Image im = random_image(h, w, rng);
    Mask m = random_mask(h, w, rng);
    resize_and_random_crop(im, &m, 48, 64, ScaleJitter{}, rng);
    EXPECT_EQ(im.h, 48);
    EXPECT_EQ(im.w, 64);
    EXPECT_EQ(m.h, 48);
    EXPECT_EQ(m.w, 64);
    for (auto v : m.data) EXPECT_LE(v, 1);
  }
}

TEST(ResizeAndRandomCrop, IdentityWithoutJitterAtTargetSize) {
  std::mt19937_64 rng(6);
  const Image im = random_image(48, 64, rng);
  const Mask m = random_mask(48, 64, rng);
  Image a = im;
  Mask b = m;
  resize_and_random_crop(a, &b, 48, 64, ScaleJitter{false, 0.8, 1.2}, rng);
  EXPECT_EQ(a, im);
  EXPECT_EQ(b, m);
}

TEST(ResizeAndRandomCrop, ImageAndMaskStayAligned) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    // The mask marks bright pixels; geometry must keep that relation.
    Image im = Image::zeros(40, 40);
    Mask m = Mask::zeros(40, 40);
    for (int y = 10; y < 30; ++y)
      for (int x = 5; x < 25; ++x) {
        m.at(y, x) = 1;
        for (int c = 0; c < 3; ++c) im.at(c, y, x) = 1.0;
      }
    resize_and_random_crop(im, &m, 32, 32, ScaleJitter{}, rng);
    int agree = 0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) agree += (im.at(0, y, x) > 0.5) == (m.at(y, x) == 1);
    EXPECT_GE(agree, 32 * 32 - 2 * 32 * 2);
  }
}

TEST(FlipAugment, NegatesAngleAndMirrors) {
  std::mt19937_64 rng(8);
  const Image im = coordinate_image(3, 5);
  int flipped = 0;
  for (int i = 0; i < 200; ++i) {
    Image a = im;
    double angle = 0.3;
    const bool f = flip_augment(a, angle, rng);
    flipped += f;
    if (f) {
      EXPECT_EQ(angle, -0.3);
      EXPECT_EQ(a, flip_image(im));
      EXPECT_EQ(a.at(2, 1, 0), im.at(2, 1, 4));
    } else {
      EXPECT_EQ(angle, 0.3);
      EXPECT_EQ(a, im);
    }
  }
  EXPECT_GT(flipped, 60);
  EXPECT_LT(flipped, 140);
}

TEST(FlipAugment, ZeroAngleAndInvolution) {
  std::mt19937_64 rng(9);
  Image a = coordinate_image(4, 6);
  double angle = 0.0;
  flip_augment(a, angle, rng, 1.0);
  EXPECT_EQ(angle, 0.0);
  EXPECT_EQ(flip_image(flip_image(a)), a);
  const Mask m = random_mask(4, 6, rng);
  EXPECT_EQ(flip_mask(flip_mask(m)), m);
}

TEST(FlipAugment, ProbabilityExtremes) {
  std::mt19937_64 rng(10);
  const Image im = coordinate_image(2, 3);
  for (int i = 0; i < 20; ++i) {
    Image a = im;
    double angle = 0.5;
    EXPECT_FALSE(flip_augment(a, angle, rng, 0.0));
    EXPECT_TRUE(flip_augment(a, angle, rng, 1.0));
    EXPECT_EQ(angle, -0.5);
  }
}

TEST(FlipAugment, MaskFollowsImage) {
  std::mt19937_64 rng(11);
  const Image im = coordinate_image(3, 4);
  const Mask m = random_mask(3, 4, rng);
  Image a = im;
  Mask b = m;
  double angle = 0.1;
  flip_augment(a, angle, rng, 1.0, &b);
  EXPECT_EQ(b, flip_mask(m));
}

TEST(Photometric, ZeroStrengthIsIdentity) {
  std::mt19937_64 rng(12);
  const Image im = random_image(16, 16, rng);
  Image a = im;
  photometric_augment(a, PhotometricConfig::none(), rng);
  EXPECT_EQ(a, im);
}

TEST(Photometric, OutputStaysInUnitRange) {
  std::mt19937_64 rng(13);
  PhotometricConfig strong{0.2, 0.2, 0.2, 1.0};
  for (int i = 0; i < 100; ++i) {
    Image a = random_image(12, 12, rng);
    photometric_augment(a, strong, rng);
    for (double v : a.data) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Photometric, BlurPreservesMean) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    Image a = random_image(24, 24, rng);
    double before = 0.0;
    for (double v : a.data) before += v;
    const double sigma = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    gaussian_blur(a, sigma);
    double after = 0.0;
    for (double v : a.data) after += v;
    EXPECT_NEAR(after / a.data.size(), before / a.data.size(), 1e-2);
  }
}

TEST(Batches, LayoutAndThreshold) {
  std::mt19937_64 rng(15);
  const Image a = random_image(2, 3, rng), b = random_image(2, 3, rng);
  const Image* ims[] = {&a, &b};
  const Tensor t = image_batch(ims);
  EXPECT_EQ(t.shape(), (Shape{2, 3, 2, 3}));
  EXPECT_EQ(t.at(1, 2, 1, 0), b.at(2, 1, 0));

  const Mask m = random_mask(2, 3, rng);
  const Mask* ms[] = {&m};
  const Tensor mt = mask_batch(ms);
  EXPECT_EQ(mt.at(0, 0, 1, 2), m.at(1, 2) ? 1.0 : 0.0);

  const Tensor logits = Tensor::from({1, 1, 1, 3}, {-0.1, 0.0, 0.1});
  const Mask pred = masks_from_logits(logits)[0];
  EXPECT_EQ(pred.data, (std::vector<std::uint8_t>{0, 0, 1}));

  const Image c = random_image(3, 3, rng);
  const Image* bad[] = {&a, &c};
  EXPECT_THROW(image_batch(bad), ShapeError);
}

TEST(PngIo, RoundTrips) {
  const auto dir = std::filesystem::temp_directory_path() / "roadmtl_png_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(16);
  Image im = Image::zeros(5, 7);
  for (double& v : im.data) v = std::uniform_int_distribution<int>(0, 255)(rng) / 255.0;
  write_image((dir / "a.png").string(), im);
  const Image back = read_image((dir / "a.png").string());
  ASSERT_EQ(back.h, 5);
  for (std::size_t i = 0; i < im.data.size(); ++i)
    EXPECT_NEAR(back.data[i], im.data[i], 1e-12);

  const Mask m = random_mask(5, 7, rng);
  write_mask((dir / "m.png").string(), m);
  EXPECT_EQ(read_mask((dir / "m.png").string()), m);

  LabelMap l{3, 4, {0, 13, 43, 27, 65, 300, 1, 2, 3, 4, 5, 6}};
  write_label_map((dir / "l.png").string(), l);
  EXPECT_EQ(read_label_map((dir / "l.png").string()).data, l.data);

  EXPECT_THROW(read_image((dir / "missing.png").string()), DataError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace roadmtl
