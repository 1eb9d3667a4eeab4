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

#include <filesystem>
#include <fstream>
#include <set>

#include "roadmtl/dataset.hpp"
#include "roadmtl/error.hpp"
#include "roadmtl/random.hpp"
#include "roadmtl/synth.hpp"

namespace roadmtl {
namespace {

namespace fs = std::filesystem;

TEST(Synth, StraightRoadIsSymmetricWithZeroAngle) {
  SynthSceneParams p;
  p.curvature = 0.0;
  p.road_width = 500.0;
  nn::Rng rng(1);
  const Sample s = generate_synth_scene(p, 64, 96, rng);
  EXPECT_EQ(*s.steer_angle, 0.0);
  EXPECT_EQ(flip_mask(*s.road_mask), *s.road_mask);
  EXPECT_GT(s.road_mask->count(), 0u);
}

TEST(Synth, MirroredCurvatureMirrorsMaskAndNegatesAngle) {
  nn::Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    SynthSceneParams p = sample_synth_params(40, 152, Weather::kSnow, rng);
    SynthSceneParams q = p;
    q.curvature = -p.curvature;
    nn::Rng a(i), b(i);
    const Sample sp = generate_synth_scene(p, 40, 152, a);
    const Sample sq = generate_synth_scene(q, 40, 152, b);
    EXPECT_EQ(*sq.steer_angle, -*sp.steer_angle);
    EXPECT_EQ(flip_mask(*sp.road_mask), *sq.road_mask);
  }
}

TEST(Synth, AngleFollowsGainAndClamps) {
  EXPECT_DOUBLE_EQ(synth_angle(0.004), 0.4);
  EXPECT_DOUBLE_EQ(synth_angle(-0.004), -0.4);
  EXPECT_EQ(synth_angle(0.5), 1.0);
  EXPECT_EQ(synth_angle(-0.5), -1.0);
}

TEST(Synth, SampledCurvatureIsBoundedAndAnglesInRange) {
  nn::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const SynthSceneParams p = sample_synth_params(32, 128, Weather::kGravel, rng);
    EXPECT_LE(std::fabs(p.curvature), max_synth_curvature(32, 128, p.horizon));
    EXPECT_GE(synth_angle(p.curvature), -1.0);
    EXPECT_LE(synth_angle(p.curvature), 1.0);
  }
}

TEST(Synth, RoadFractionBandOverManyDraws) {
  nn::Rng rng(4);
  const Weather weathers[] = {Weather::kClear, Weather::kSnow, Weather::kGravel};
  for (int i = 0; i < 100; ++i) {
    for (const auto& [h, w] : {std::pair{64, 64}, std::pair{32, 128}}) {
      const SynthSceneParams p = sample_synth_params(h, w, weathers[i % 3], rng);
      const Sample s = generate_synth_scene(p, h, w, rng);
      const double f = road_fraction(*s.road_mask);
      EXPECT_GE(f, 0.05) << i;
      EXPECT_LE(f, 0.60) << i;
    }
  }
}

TEST(Synth, PixelsInUnitRangeAndDeterministic) {
  nn::Rng a(5), b(5);
  SynthSceneParams p;
  p.weather = Weather::kSnow;
  const Sample s1 = generate_synth_scene(p, 32, 64, a);
  const Sample s2 = generate_synth_scene(p, 32, 64, b);
  EXPECT_EQ(s1.image, s2.image);
  for (double v : s1.image.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Synth, DegenerateParamsAreContractErrors) {
  nn::Rng rng(6);
  SynthSceneParams p;
  p.road_width = 0.0;
  EXPECT_THROW(generate_synth_scene(p, 32, 32, rng), ContractError);
  p = SynthSceneParams{};
  p.horizon = 1.0;
  EXPECT_THROW(generate_synth_scene(p, 32, 32, rng), ContractError);
  p = SynthSceneParams{};
  p.curvature = std::nan("");
  EXPECT_THROW(generate_synth_scene(p, 32, 32, rng), ContractError);
}

TEST(Synth, WeatherChangesAppearanceNotGeometry) {
  SynthSceneParams p;
  p.curvature = 0.002;
  nn::Rng a(7), b(7);
  const Sample clear = generate_synth_scene(p, 32, 64, a);
  p.weather = Weather::kSnow;
  const Sample snow = generate_synth_scene(p, 32, 64, b);
  EXPECT_EQ(*clear.road_mask, *snow.road_mask);
  EXPECT_NE(clear.image, snow.image);
}

TEST(SynthSet, RolesCarryTheRightLabels) {
  const Weather w[] = {Weather::kClear};
  for (const Sample& s : generate_synth_set(SynthRole::kSource, 3, 32, 32, w, 1)) {
    EXPECT_EQ(s.kind, DatasetKind::kSource);
    EXPECT_TRUE(s.road_mask);
    EXPECT_FALSE(s.steer_angle);
  }
  for (const Sample& s : generate_synth_set(SynthRole::kTarget, 3, 32, 64, w, 1)) {
    EXPECT_EQ(s.kind, DatasetKind::kTarget);
    EXPECT_FALSE(s.road_mask);
    EXPECT_TRUE(s.steer_angle);
  }
  const auto val = generate_synth_set(SynthRole::kAnnotatedTarget, 3, 32, 64, w, 1);
  EXPECT_TRUE(val[0].road_mask && val[0].steer_angle);
  EXPECT_EQ(val[2].id, "val_00002");
  const auto again = generate_synth_set(SynthRole::kAnnotatedTarget, 3, 32, 64, w, 1);
  EXPECT_EQ(again[1].image, val[1].image);
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / "roadmtl_manifest_test";
    fs::remove_all(root_);
    fs::create_directories(root_ / "images");
    fs::create_directories(root_ / "masks");
  }
  void TearDown() override { fs::remove_all(root_); }
  fs::path root_;
};

TEST_F(ManifestTest, WriteLoadRoundTripAndAngleNormalization) {
  DatasetManifest m;
  m.root = root_.string();
  m.split = Split::kVal;
  m.max_angle = 4.0;
  for (int i = 0; i < 3; ++i) {
    const std::string id = "s" + std::to_string(i);
    Image im = Image::zeros(4, 6);
    im.at(0, 1, i) = 1.0;
    write_image((root_ / "images" / (id + ".png")).string(), im);
    Mask mk = Mask::zeros(4, 6);
    mk.at(2, i) = 1;
    write_mask((root_ / "masks" / (id + ".png")).string(), mk);
    ManifestEntry e{id, "images/" + id + ".png", "masks/" + id + ".png",
                    2.0 - i, 100.5 + i};
    m.entries.push_back(e);
  }
  const std::string path = manifest_path(root_.string(), Split::kVal);
  write_manifest(path, m);
  const DatasetManifest back = load_manifest(path);
  EXPECT_EQ(back.split, Split::kVal);
  EXPECT_EQ(back.max_angle, 4.0);
  ASSERT_EQ(back.entries.size(), 3u);
  EXPECT_EQ(*back.entries[1].angle, 1.0);
  EXPECT_EQ(*back.entries[2].timestamp, 102.5);
  const auto samples = load_samples(back, DatasetKind::kTarget);
  EXPECT_EQ(*samples[0].steer_angle, 0.5);
  EXPECT_EQ(samples[2].road_mask->at(2, 2), 1);
  EXPECT_EQ(samples[2].image.at(0, 1, 2), 1.0);
}

TEST_F(ManifestTest, MissingFilesListIds) {
  DatasetManifest m;
  m.root = root_.string();
  m.entries.push_back({"ghost_a", "images/a.png", std::nullopt, 0.1, std::nullopt});
  m.entries.push_back({"ghost_b", "images/b.png", std::nullopt, 0.2, std::nullopt});
  const std::string path = manifest_path(root_.string(), Split::kTrain);
  write_manifest(path, m);
  try {
    load_manifest(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost_a"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("ghost_b"), std::string::npos);
  }
}

TEST_F(ManifestTest, EmptyManifestGivesEmptyStream) {
  DatasetManifest m;
  m.root = root_.string();
  const std::string path = manifest_path(root_.string(), Split::kTest);
  write_manifest(path, m);
  const DatasetManifest back = load_manifest(path);
  EXPECT_TRUE(back.entries.empty());
  EXPECT_TRUE(load_samples(back, DatasetKind::kSource).empty());
  EXPECT_TRUE(epoch_batches(0, 16, 1).empty());
}

TEST_F(ManifestTest, MalformedHeaderIsDataError) {
  const fs::path p = root_ / "train.tsv";
  std::ofstream(p) << "not a manifest\n";
  EXPECT_THROW(load_manifest(p.string()), DataError);
}

TEST(BatchSampler, FixedSeedGivesIdenticalSequence) {
  BatchSampler a(50, 4, 9), b(50, 4, 9), c(50, 4, 10);
  bool differs = false;
  for (std::uint64_t i = 0; i < 40; ++i) {
    EXPECT_EQ(a.batch(i), b.batch(i));
    differs |= a.batch(i) != c.batch(i);
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.batch(37), BatchSampler(50, 4, 9).batch(37));
}

TEST(BatchSampler, EpochDrawsWithoutReplacement) {
  const std::size_t n = 17074, batch = 16;
  BatchSampler s(n, batch, 3);
  std::vector<int> seen(n, 0);
  for (std::uint64_t i = 0; i < s.batches_per_epoch(); ++i)
    for (std::size_t k : s.batch(i)) ++seen[k];
  std::size_t distinct = 0;
  for (int v : seen) {
    EXPECT_LE(v, 1);
    distinct += v;
  }
  EXPECT_EQ(distinct, (n / batch) * batch);

  const auto epoch = epoch_batches(n, batch, 3);
  std::multiset<std::size_t> all;
  for (const auto& b : epoch) all.insert(b.begin(), b.end());
  EXPECT_EQ(all.size(), n);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), n);
}

TEST(BatchSampler, WrapsAcrossEpochs) {
  BatchSampler s(5, 4, 2);
  std::vector<std::size_t> flat;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto b = s.batch(i);
    flat.insert(flat.end(), b.begin(), b.end());
  }
  for (std::size_t e = 0; e < 4; ++e) {
    std::set<std::size_t> one(flat.begin() + e * 5, flat.begin() + e * 5 + 5);
    EXPECT_EQ(one.size(), 5u);
  }
  EXPECT_THROW(BatchSampler(0, 4, 1).batch(0), ContractError);
}

}  // namespace
}  // namespace roadmtl
