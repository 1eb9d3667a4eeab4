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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "roadmtl/checkpoint.hpp"
#include "roadmtl/config.hpp"
#include "roadmtl/error.hpp"

namespace roadmtl {
namespace {

namespace fs = std::filesystem;

TEST(RunConfig, DefaultsCarryTrainingConstants) {
  const RunConfig c;
  EXPECT_EQ(c.train.total_steps, 100000);
  EXPECT_EQ(c.train.source_batch, 16);
  EXPECT_EQ(c.train.target_batch, 32);
  EXPECT_EQ(c.train.sgd_lr, 2.5e-4);
  EXPECT_EQ(c.train.nesterov_momentum, 0.9);
  EXPECT_EQ(c.train.weight_decay, 5e-4);
  EXPECT_EQ(c.train.adam_lr, 1e-4);
  EXPECT_EQ(c.train.adam_beta1, 0.9);
  EXPECT_EQ(c.train.adam_beta2, 0.99);
  EXPECT_EQ(c.train.val_every, 1000);
  EXPECT_FALSE(c.train.poly_decay);
  EXPECT_EQ(c.data.target_h, 320);
  EXPECT_EQ(c.data.target_w, 1216);
  EXPECT_EQ(c.data.source_h, 768);
  EXPECT_EQ(c.data.source_w, 1024);
  EXPECT_EQ(c.loss_weights.road_class_weight, 2.287);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, SerializeParseRoundTrip) {
  for (const RunConfig& c : {RunConfig{}, desk_config()}) {
    const std::string text = c.serialize();
    const RunConfig back = RunConfig::parse(text);
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.serialize(), text);
  }
}

TEST(RunConfig, CanonicalFileIsByteStable) {
  RunConfig c = desk_config();
  c.train.mode = TrainMode::kTransferLearning;
  c.train.seed = 12345678901234ULL;
  c.loss_weights.lambda_adv_a = 0.1 + 0.2;
  c.backbone.weights_path = "weights/backbone.ckpt";
  c.data.drivable_ids = {1, 2, 3};
  const std::string canonical = c.serialize();
  EXPECT_NE(canonical.find("lambda_adv_a = 0.30000000000000004"), std::string::npos);
  EXPECT_NE(canonical.find("mode = tl"), std::string::npos);
  EXPECT_NE(canonical.find("drivable_ids = 1,2,3"), std::string::npos);
  EXPECT_EQ(RunConfig::parse(canonical).serialize(), canonical);
}

TEST(RunConfig, PartialFileKeepsDefaults) {
  const RunConfig c = RunConfig::parse(
      "# desk run\n[train]\nmode = st\nseed = 7\n\n[loss_weights]\n"
      "lambda_mr = 0.25\n");
  EXPECT_EQ(c.train.mode, TrainMode::kSingleTask);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.loss_weights.lambda_mr, 0.25);
  EXPECT_EQ(c.loss_weights.lambda_aux, 0.5);
}

TEST(RunConfig, RejectsUnknownKeysAndSections) {
  EXPECT_THROW(RunConfig::parse("[train]\nlearning_rate = 1\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[optimizer]\nlr = 1\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("mode = st\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[train]\nmode st\n"), ConfigError);
}

TEST(RunConfig, RejectsBadValues) {
  EXPECT_THROW(RunConfig::parse("[train]\nsgd_lr = fast\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[train]\nmode = both\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[train]\ndeterministic = yes\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[train]\nval_every = 300\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[train]\nsource_batch = 0\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[data]\ntarget_h = 100\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[backbone]\nchannels = 8,8,8\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[loss_weights]\nlambda_aux = nan\n"), ConfigError);
}

TEST(RunConfig, ModeNames) {
  EXPECT_EQ(parse_train_mode("st"), TrainMode::kSingleTask);
  EXPECT_EQ(parse_train_mode("tl"), TrainMode::kTransferLearning);
  EXPECT_EQ(parse_train_mode("mtl"), TrainMode::kMultiTask);
  EXPECT_EQ(to_string(TrainMode::kMultiTask), "mtl");
}

TEST(RunConfig, SaveLoadFile) {
  const fs::path p = fs::temp_directory_path() / "roadmtl_cfg_test" / "run.ini";
  const RunConfig c = desk_config();
  c.save(p.string());
  EXPECT_EQ(RunConfig::load(p.string()), c);
  EXPECT_THROW(RunConfig::load((p.parent_path() / "nope.ini").string()), ConfigError);
  fs::remove_all(p.parent_path());
}

TEST(RunConfig, DerivedModelAndDiscriminatorConfigs) {
  const RunConfig c = desk_config();
  EXPECT_EQ(c.model_config().target_h, c.data.target_h);
  EXPECT_EQ(c.model_config().mti_width, c.model.mti_width);
  EXPECT_EQ(c.discriminator_config().adam.lr, c.train.adam_lr);
  EXPECT_EQ(c.discriminator_config().adam.beta2, c.train.adam_beta2);
  EXPECT_EQ(c.discriminator_config().base_channels, c.model.disc_base_channels);
}

TEST(DataRoot, ExplicitWinsThenEnvironment) {
  EXPECT_EQ(resolve_data_root("/data/x", "source"), "/data/x");
  setenv("ROADMTL_DATA_ROOT", "/srv/roads", 1);
  EXPECT_EQ(resolve_data_root("", "target"), "/srv/roads/target");
  unsetenv("ROADMTL_DATA_ROOT");
  EXPECT_THROW(resolve_data_root("", "target"), ConfigError);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(2.5e-4), "0.00025");
  EXPECT_EQ(format_number(2.287), "2.287");
  EXPECT_EQ(format_number(100000), "100000");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "roadmtl_ckpt_test";
    fs::remove_all(dir_);
    ck_.step = 42;
    ck_.best_miou = 0.6180339887;
    ck_.meta["config"] = "[train]\nseed = 1\n";
    ck_.meta["note"] = "";
    ck_.arrays.push_back({"w", {1.0, -2.5, 1e-300, 0.1}});
    ck_.arrays.push_back({"empty", {}});
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path() const { return (dir_ / "a" / "x.ckpt").string(); }

  fs::path dir_;
  Checkpoint ck_;
};

TEST_F(CheckpointTest, RoundTripsBitwise) {
  save_checkpoint(path(), ck_);
  const Checkpoint back = load_checkpoint(path());
  EXPECT_EQ(back.step, 42);
  EXPECT_EQ(back.best_miou, ck_.best_miou);
  EXPECT_EQ(back.meta, ck_.meta);
  ASSERT_EQ(back.arrays.size(), 2u);
  EXPECT_EQ(back.arrays[0], ck_.arrays[0]);
  EXPECT_TRUE(back.find("empty")->empty());
  EXPECT_EQ(back.find("missing"), nullptr);
  EXPECT_FALSE(fs::exists(path() + ".tmp"));
}

TEST_F(CheckpointTest, DetectsCorruption) {
  save_checkpoint(path(), ck_);
  std::string bytes;
  {
    std::ifstream in(path(), std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream(path(), std::ios::binary | std::ios::trunc) << b;
  };
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  write(flipped);
  EXPECT_THROW(load_checkpoint(path()), IoError);
  write(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_checkpoint(path()), IoError);
  std::string magic = bytes;
  magic[0] = 'X';
  write(magic);
  EXPECT_THROW(load_checkpoint(path()), IoError);
  EXPECT_THROW(load_checkpoint((dir_ / "none.ckpt").string()), IoError);
}

}  // namespace
}  // namespace roadmtl
