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

// The operations behind the roadmtl command-line tool.
//
// Dataset layout (source and target alike):
//   <root>/images/<id>.png   8-bit RGB
//   <root>/masks/<id>.png    8-bit grayscale, 0 = background, 255 = road
//   <root>/{train,val,test}.tsv
// Labeled multi-class input for preprocessing:
//   <root>/images/<id>.png, <root>/labels/<id>.png (8- or 16-bit class ids)

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roadmtl/config.hpp"
#include "roadmtl/dataset.hpp"
#include "roadmtl/metrics.hpp"
#include "roadmtl/trainer.hpp"

namespace roadmtl {

struct PreprocessOptions {
  std::string src_root;
  std::string out_root;
  std::vector<int> class_ids = default_drivable_ids();
  double min_road_fraction = 0.05;
  int out_h = 768;
  int out_w = 1024;
  Split split = Split::kTrain;
};

struct PreprocessSummary {
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  std::vector<std::string> errors;  // "<id>: <reason>"
};

// merge -> filter -> crop top quarter -> resize; writes images, masks and
// the split manifest. Unreadable files are collected rather than fatal.
PreprocessSummary run_preprocess(const PreprocessOptions& options);

struct SynthOptions {
  std::size_t n_source = 200;
  std::size_t n_target = 400;
  std::size_t n_val = 100;
  std::size_t n_test = 100;
  std::uint64_t seed = 0;
  std::string out_root;
  int source_h = 768;
  int source_w = 1024;
  int target_h = 320;
  int target_w = 1216;
};

// <out>/source/train.tsv with masks (clear weather); <out>/target/train.tsv
// with angles, and <out>/target/{val,test}.tsv with masks and angles (snow
// and gravel).
void run_synth(const SynthOptions& options);

// Training data for a run: the source and target train splits plus the
// target val split, resolved against $ROADMTL_DATA_ROOT when the configured
// roots are empty.
TrainData load_train_data(const RunConfig& config);

// Trains into `out_dir` (config.ini, checkpoints, run.tsv). Resumes from
// `resume` when given.
FitResult run_train(const RunConfig& config, const std::string& out_dir,
                    const std::optional<std::string>& resume = std::nullopt,
                    const FitOptions& hooks = {});

// Rebuilds the trainer stored in a checkpoint. A requested mode that
// differs from the stored one is a ConfigError.
std::unique_ptr<Trainer> trainer_from_checkpoint(
    const std::string& path, const std::optional<TrainMode>& mode);

EvalReport run_eval(const std::string& checkpoint, Split split,
                    const std::optional<TrainMode>& mode = std::nullopt);

enum class VisualKind { kSteerFeatures, kSegmentation };

VisualKind parse_visual_kind(const std::string& s);

// Per sample: <id>_image.png plus either <id>_steer_<c>.png for the four
// steering-feature channels or <id>_gt.png and <id>_pred.png. Returns the
// number of files written.
std::size_t run_visualize(const std::string& checkpoint, Split split,
                          VisualKind what, const std::string& out_dir,
                          std::size_t limit,
                          const std::optional<TrainMode>& mode = std::nullopt);

}  // namespace roadmtl
