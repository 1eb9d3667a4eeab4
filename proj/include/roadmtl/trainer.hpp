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

// Mixed-batch training loop: SGD (Nesterov) on the segmentation network,
// Adam on the two discriminators, validation on annotated target samples and
// best-checkpoint selection.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roadmtl/adversarial.hpp"
#include "roadmtl/checkpoint.hpp"
#include "roadmtl/config.hpp"
#include "roadmtl/data.hpp"
#include "roadmtl/dataset.hpp"
#include "roadmtl/losses.hpp"
#include "roadmtl/metrics.hpp"
#include "roadmtl/model.hpp"
#include "roadmtl/optim.hpp"

namespace roadmtl {

// Indexed sample access, either in memory or loaded lazily from a manifest.
// Counts every access so callers can prove a data set was never touched.
class SampleSource {
 public:
  SampleSource() = default;
  static SampleSource in_memory(std::vector<Sample> samples);
  static SampleSource from_manifest(DatasetManifest manifest, DatasetKind kind);

  std::size_t size() const;
  Sample get(std::size_t index) const;
  std::size_t accesses() const { return accesses_; }

 private:
  std::vector<Sample> samples_;
  std::optional<DatasetManifest> manifest_;
  DatasetKind kind_ = DatasetKind::kSource;
  mutable std::size_t accesses_ = 0;
};

struct TrainData {
  SampleSource source;
  SampleSource target;
  SampleSource val;
};

// Network-ready tensors for one sub-batch.
struct SourceBatch {
  Tensor images;  // N x 3 x H x W in [0, 1]
  Tensor masks;   // N x 1 x H x W in {0, 1}
};

struct TargetBatch {
  Tensor images;  // N x 3 x H x W in [0, 1]
  Tensor angles;  // N x 1 x 1 x 1
};

struct StepRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  SourceLossValues source;
  std::optional<TargetLossValues> target;
  std::optional<DiscriminatorLosses> discriminator;
};

struct ValidationRecord {
  std::int64_t step = 0;
  double miou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

class Trainer {
 public:
  explicit Trainer(RunConfig config);

  const RunConfig& config() const { return config_; }
  TrainMode mode() const { return config_.train.mode; }
  RoadMtlModel& model() { return *model_; }
  DiscriminatorPair& discriminators() { return *discriminators_; }
  optim::Sgd& optimizer() { return *sgd_; }

  // Number of completed optimization steps.
  std::int64_t step() const { return step_; }
  double best_val_miou() const { return best_miou_; }
  const std::string& best_checkpoint_path() const { return best_path_; }

  // One optimization step. Source and target losses are summed and applied
  // with a single SGD update, then the discriminators take one Adam step.
  // Single-task mode requires `target` to be null; the other modes require it.
  StepRecord train_step(const SourceBatch& source, const TargetBatch* target);

  // Augmented batches for the step that follows step(); a pure function of
  // (seed, step, data).
  SourceBatch source_batch(const SampleSource& source) const;
  TargetBatch target_batch(const SampleSource& target) const;

  // Primary segmentation thresholded at probability 0.5. Leaves parameters,
  // buffers and the training flag unchanged.
  EvalReport evaluate(const SampleSource& samples);

  // Records a validation result and returns true when it is a new best.
  bool record_validation(const ValidationRecord& record,
                         const std::string& checkpoint_path);
  const std::vector<ValidationRecord>& validations() const {
    return validations_;
  }

  Checkpoint to_checkpoint();
  void restore(const Checkpoint& checkpoint);
  void save(const std::string& path) { save_checkpoint(path, to_checkpoint()); }
  void load(const std::string& path) { restore(load_checkpoint(path)); }

 private:
  std::vector<std::pair<std::string, std::vector<double>*>> state_arrays();

  RunConfig config_;
  std::unique_ptr<RoadMtlModel> model_;
  std::unique_ptr<DiscriminatorPair> discriminators_;
  std::unique_ptr<optim::Sgd> sgd_;
  std::int64_t step_ = 0;
  double best_miou_ = -1.0;
  std::string best_path_;
  std::vector<ValidationRecord> validations_;
};

struct FitOptions {
  std::string run_dir = "run";  // checkpoints and run.tsv
  // Stops after this step (to emulate an interruption); total_steps if unset.
  std::optional<std::int64_t> stop_at;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const ValidationRecord&)> on_validation;
};

struct FitResult {
  std::int64_t steps = 0;
  double best_val_miou = -1.0;  // -1 when no validation ran
  std::string best_checkpoint_path;
  std::vector<ValidationRecord> validations;
};

// Runs the trainer from its current step to total_steps. Validates and
// writes a checkpoint every val_every steps, keeps best.ckpt pointing at the
// highest validation mIoU and appends one row per step to run.tsv. Rows past
// the current step from an interrupted run are dropped before appending.
FitResult fit(Trainer& trainer, TrainData& data, const FitOptions& options);

// Fresh trainer for `mode`, then fit.
FitResult train_variant(TrainMode mode, RunConfig config, TrainData& data,
                        const FitOptions& options);

// Column header and row formatting of run.tsv.
std::string run_log_header();
std::string run_log_row(const StepRecord& record);

std::string checkpoint_file_name(std::int64_t step);

}  // namespace roadmtl
