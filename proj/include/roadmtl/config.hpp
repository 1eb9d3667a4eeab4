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

// Run configuration and its INI-style text form.
//
//   # comment
//   [section]
//   key = value
//
// Sections: backbone, model, data, loss_weights, train. Unknown sections and
// keys are rejected. serialize() writes every key in a fixed order with
// shortest round-trip numbers, so parse(serialize(c)) == c and canonical
// files survive parse -> serialize byte for byte.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadmtl/adversarial.hpp"
#include "roadmtl/backbone.hpp"
#include "roadmtl/data.hpp"
#include "roadmtl/losses.hpp"
#include "roadmtl/model.hpp"

namespace roadmtl {

enum class TrainMode { kSingleTask, kTransferLearning, kMultiTask };

std::string to_string(TrainMode mode);  // "st", "tl", "mtl"
TrainMode parse_train_mode(const std::string& s);

struct DataConfig {
  std::string source_root;  // empty: $ROADMTL_DATA_ROOT/source
  std::string target_root;  // empty: $ROADMTL_DATA_ROOT/target
  int source_h = 768;
  int source_w = 1024;
  int target_h = 320;
  int target_w = 1216;
  std::vector<int> drivable_ids = default_drivable_ids();
  double min_road_fraction = 0.05;
  ScaleJitter scale_jitter{};
  PhotometricConfig photometric{};
  double flip_probability = 0.5;

  void validate() const;
};

struct TrainConfig {
  TrainMode mode = TrainMode::kMultiTask;
  std::int64_t total_steps = 100000;
  int source_batch = 16;
  int target_batch = 32;
  double sgd_lr = 2.5e-4;
  double nesterov_momentum = 0.9;
  double weight_decay = 5e-4;
  bool poly_decay = false;
  double poly_power = 0.9;
  double adam_lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  std::int64_t val_every = 1000;
  int val_batch = 8;
  std::uint64_t seed = 0;
  bool deterministic = true;
  std::string checkpoint_dir = "checkpoints";

  void validate() const;
};

struct ModelWidths {
  int mti_width = 64;
  int aux_width = 64;
  int steer_head_width = 64;
  int disc_base_channels = 64;
};

struct RunConfig {
  BackboneConfig backbone;
  ModelWidths model;
  DataConfig data;
  LossWeights loss_weights;
  TrainConfig train;

  void validate() const;
  ModelConfig model_config() const;
  DiscriminatorConfig discriminator_config() const;

  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  bool operator==(const RunConfig& other) const {
    return serialize() == other.serialize();
  }
};

// Shortest decimal string that parses back to exactly `v`.
std::string format_number(double v);

// A small configuration for the desk-scale experiment: 64x64 source images,
// 32x128 target images, reference_tiny backbone and narrow blocks.
RunConfig desk_config();

// Resolves an empty dataset root to $ROADMTL_DATA_ROOT/<subdir> (the bare
// variable when subdir is empty).
std::string resolve_data_root(const std::string& configured,
                              const std::string& subdir);

}  // namespace roadmtl
