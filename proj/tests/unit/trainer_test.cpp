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
#include <filesystem>
#include <fstream>
#include <sstream>

#include "roadmtl/error.hpp"
#include "roadmtl/synth.hpp"
#include "roadmtl/trainer.hpp"

namespace roadmtl {
namespace {

namespace fs = std::filesystem;

RunConfig small_config(TrainMode mode, std::uint64_t seed = 0) {
  RunConfig c = desk_config();
  c.backbone.channels = {8, 8, 8, 8};
  c.model = {8, 8, 8, 8};
  c.data.source_h = 32;
  c.data.source_w = 32;
  c.data.target_h = 32;
  c.data.target_w = 64;
  c.train.mode = mode;
  c.train.seed = seed;
  c.train.source_batch = 2;
  c.train.target_batch = 2;
  c.train.total_steps = 20;
  c.train.val_every = 10;
  c.train.val_batch = 4;
  return c;
}

TrainData small_data(std::uint64_t seed = 3) {
  const Weather src[] = {Weather::kClear};
  const Weather tgt[] = {Weather::kSnow, Weather::kGravel};
  return {SampleSource::in_memory(
              generate_synth_set(SynthRole::kSource, 12, 40, 40, src, seed)),
          SampleSource::in_memory(
              generate_synth_set(SynthRole::kTarget, 12, 32, 64, tgt, seed)),
          SampleSource::in_memory(generate_synth_set(
              SynthRole::kAnnotatedTarget, 5, 32, 64, tgt, seed + 1))};
}

std::vector<std::vector<double>> snapshot(nn::Module& m) {
  std::vector<std::vector<double>> out;
  for (auto& [n, t] : m.named_parameters())
    out.emplace_back(t->data().begin(), t->data().end());
  for (auto& [n, t] : m.named_buffers())
    out.emplace_back(t->data().begin(), t->data().end());
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("roadmtl_trainer_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  FitOptions options(const std::string& sub) const {
    FitOptions o;
    o.run_dir = (dir_ / sub).string();
    return o;
  }
  fs::path dir_;
};

TEST(TrainStep, BatchCompositionIsChecked) {
  TrainData d = small_data();
  Trainer st(small_config(TrainMode::kSingleTask));
  const SourceBatch sb = st.source_batch(d.source);
  const TargetBatch tb = st.target_batch(d.target);
  EXPECT_THROW(st.train_step(sb, &tb), ContractError);
  Trainer mtl(small_config(TrainMode::kMultiTask));
  EXPECT_THROW(mtl.train_step(sb, nullptr), ContractError);
  RunConfig big = small_config(TrainMode::kMultiTask);
  big.train.target_batch = 3;
  Trainer wrong(big);
  EXPECT_THROW(wrong.train_step(sb, &tb), ContractError);
  EXPECT_EQ(wrong.step(), 0);
}

TEST(TrainStep, ZeroAdversarialWeightsReduceToSupervisedSgd) {
  RunConfig c = small_config(TrainMode::kMultiTask);
  c.loss_weights.lambda_adv_p = 0.0;
  c.loss_weights.lambda_adv_a = 0.0;
  c.loss_weights.lambda_mr = 0.0;
  TrainData d = small_data();
  Trainer a(c), b(c);
  const SourceBatch sb = a.source_batch(d.source);
  const TargetBatch tb = a.target_batch(d.target);
  a.train_step(sb, &tb);

  // Reference: plain supervised multi-task SGD on the same batches.
  RoadMtlModel& m = b.model();
  m.train();
  const ModelOutputs so = m.forward(sb.images, DatasetKind::kSource);
  const SourceLossBreakdown s = source_loss(so, sb.masks, c.loss_weights);
  const ModelOutputs to = m.forward(tb.images, DatasetKind::kTarget);
  TargetLossInputs in;
  in.gt_angles = &tb.angles;
  in.step = 1;
  const TargetLossBreakdown t = target_loss(to, in, c.loss_weights);
  m.zero_grad();
  ops::add(s.total, t.total).backward();
  b.optimizer().step();

  EXPECT_EQ(snapshot(a.model()), snapshot(b.model()));
}

TEST(TrainStep, MemoryRegularisationGateFollowsStepCounter) {
  RunConfig c = small_config(TrainMode::kMultiTask);
  c.train.total_steps = 20000;
  c.train.val_every = 1000;
  TrainData d = small_data();
  Trainer t(c);
  Checkpoint ck = t.to_checkpoint();
  ck.step = 14998;
  t.restore(ck);
  std::vector<bool> active;
  for (int i = 0; i < 3; ++i) {
    const SourceBatch sb = t.source_batch(d.source);
    const TargetBatch tb = t.target_batch(d.target);
    const StepRecord r = t.train_step(sb, &tb);
    active.push_back(r.target->mr_active);
    EXPECT_EQ(r.step, 14999 + i);
  }
  EXPECT_EQ(active, (std::vector<bool>{false, false, true}));
}

// Source-loss descent in the modes whose target terms are absent (single
// task) or carry only the small adversarial weights (transfer learning).
TEST(TrainStep, OneStepDecreasesSourceLossOnSameBatch) {
  for (TrainMode mode : {TrainMode::kSingleTask, TrainMode::kTransferLearning}) {
    std::vector<double> drops;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RunConfig c = small_config(mode, seed);
      TrainData d = small_data(seed + 10);
      Trainer t(c);
      const SourceBatch sb = t.source_batch(d.source);
      StepRecord r;
      if (mode == TrainMode::kSingleTask) {
        r = t.train_step(sb, nullptr);
      } else {
        const TargetBatch tb = t.target_batch(d.target);
        r = t.train_step(sb, &tb);
      }
      SourceTermSet terms;
      terms.sfseg = mode != TrainMode::kSingleTask;
      NoGradGuard g;
      const ModelOutputs o = t.model().forward(sb.images, DatasetKind::kSource);
      drops.push_back(r.source.total -
                      source_loss(o, sb.masks, c.loss_weights, terms).total.item());
    }
    std::sort(drops.begin(), drops.end());
    EXPECT_GT(drops[2], 0.0) << to_string(mode);
  }
}

TEST(TrainStep, ModesPopulateTheRightTerms) {
  TrainData d = small_data();
  Trainer st(small_config(TrainMode::kSingleTask));
  const StepRecord rs = st.train_step(st.source_batch(d.source), nullptr);
  EXPECT_FALSE(rs.target);
  EXPECT_FALSE(rs.discriminator);
  EXPECT_EQ(rs.source.sfseg, 0.0);
  EXPECT_GT(rs.source.seg_a, 0.0);

  Trainer tl(small_config(TrainMode::kTransferLearning));
  const TargetBatch tb = tl.target_batch(d.target);
  const StepRecord rt = tl.train_step(tl.source_batch(d.source), &tb);
  ASSERT_TRUE(rt.target);
  EXPECT_FALSE(rt.target->steer_active);
  EXPECT_EQ(rt.target->steer, 0.0);
  EXPECT_EQ(rt.target->deep_steer, 0.0);
  const LossWeights& w = tl.config().loss_weights;
  EXPECT_DOUBLE_EQ(rt.target->total,
                   w.lambda_adv_p * rt.target->adv_p + w.lambda_adv_a * rt.target->adv_a);
  EXPECT_GT(rt.source.sfseg, 0.0);

  Trainer mtl(small_config(TrainMode::kMultiTask));
  const StepRecord rm = mtl.train_step(mtl.source_batch(d.source), &tb);
  ASSERT_TRUE(rm.target);
  EXPECT_TRUE(rm.target->steer_active);
  for (double v : {rm.source.seg_p, rm.source.seg_a, rm.source.deep_seg,
                   rm.source.sfseg, rm.source.deep_sfseg, rm.target->steer,
                   rm.target->deep_steer, rm.target->adv_p, rm.target->adv_a,
                   rm.discriminator->primary, rm.discriminator->auxiliary}) {
    EXPECT_GT(v, 0.0);
  }
}

TEST(TrainStep, TransferAndMultiTaskShareArchitecture) {
  Trainer tl(small_config(TrainMode::kTransferLearning));
  Trainer mtl(small_config(TrainMode::kMultiTask));
  auto a = tl.model().named_parameters();
  auto b = mtl.model().named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(a[i].second->shape(), b[i].second->shape());
  }
}

TEST(Evaluate, MatchesMetricsOracleAndDoesNotMutate) {
  TrainData d = small_data();
  Trainer t(small_config(TrainMode::kMultiTask));
  const auto before = snapshot(t.model());
  const EvalReport r = t.evaluate(d.val);
  EXPECT_EQ(snapshot(t.model()), before);
  EXPECT_TRUE(t.model().is_training());
  ASSERT_EQ(r.n_samples, 5u);

  t.model().eval();
  NoGradGuard g;
  double miou = 0.0;
  for (std::size_t i = 0; i < d.val.size(); ++i) {
    const Sample s = d.val.get(i);
    const Image* ims[] = {&s.image};
    const ModelOutputs o = t.model().forward(image_batch(ims), DatasetKind::kTarget);
    const Mask pred = masks_from_logits(o.primary_seg_logits)[0];
    long inter = 0, uni = 0;
    for (std::size_t k = 0; k < pred.data.size(); ++k) {
      inter += pred.data[k] && s.road_mask->data[k];
      uni += pred.data[k] || s.road_mask->data[k];
    }
    const double iou = uni ? double(inter) / uni : 1.0;
    EXPECT_NEAR(r.per_sample[i].iou, iou, 1e-12);
    miou += iou;
  }
  EXPECT_NEAR(r.miou, miou / 5.0, 1e-12);
}

TEST(Evaluate, PerfectPredictionScoresOne) {
  TrainData d = small_data();
  Trainer t(small_config(TrainMode::kMultiTask));
  Sample s = d.val.get(0);
  {
    t.model().eval();
    NoGradGuard g;
    const Image* ims[] = {&s.image};
    s.road_mask = masks_from_logits(
        t.model().forward(image_batch(ims), DatasetKind::kTarget).primary_seg_logits)[0];
    t.model().train();
  }
  const EvalReport r = t.evaluate(SampleSource::in_memory({s}));
  EXPECT_EQ(r.miou, 1.0);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
}

TEST(Evaluate, EmptyOrUnannotatedSetsAreRejected) {
  Trainer t(small_config(TrainMode::kMultiTask));
  EXPECT_THROW(t.evaluate(SampleSource::in_memory({})), ContractError);
  TrainData d = small_data();
  EXPECT_THROW(t.evaluate(d.target), DataError);
}

TEST_F(TempDir, ZeroStepsWritesNothing) {
  RunConfig c = small_config(TrainMode::kMultiTask);
  c.train.total_steps = 0;
  TrainData d = small_data();
  const FitResult r = train_variant(TrainMode::kMultiTask, c, d, options("zero"));
  EXPECT_EQ(r.steps, 0);
  EXPECT_TRUE(r.best_checkpoint_path.empty());
  EXPECT_TRUE(r.validations.empty());
  EXPECT_FALSE(fs::exists(dir_ / "zero"));
}

TEST_F(TempDir, FitCheckpointsAndTracksBest) {
  TrainData d = small_data();
  const FitResult r =
      train_variant(TrainMode::kMultiTask, small_config(TrainMode::kMultiTask), d,
                    options("fit"));
  EXPECT_EQ(r.steps, 20);
  ASSERT_EQ(r.validations.size(), 2u);
  const auto best = std::max_element(
      r.validations.begin(), r.validations.end(),
      [](const auto& a, const auto& b) { return a.miou < b.miou; });
  EXPECT_EQ(r.best_val_miou, best->miou);
  EXPECT_EQ(r.best_checkpoint_path,
            (dir_ / "fit" / checkpoint_file_name(best->step)).string());
  EXPECT_TRUE(fs::exists(dir_ / "fit" / "step_10.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "fit" / "step_20.ckpt"));
  EXPECT_EQ(read_file(dir_ / "fit" / "best.ckpt"), read_file(r.best_checkpoint_path));
  const std::string log = read_file(dir_ / "fit" / "run.tsv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 21);
  EXPECT_EQ(log.rfind(run_log_header(), 0), 0u);
}

TEST_F(TempDir, SingleTaskNeverTouchesTargetData) {
  TrainData d = small_data();
  train_variant(TrainMode::kSingleTask, small_config(TrainMode::kSingleTask), d,
                options("st"));
  EXPECT_EQ(d.target.accesses(), 0u);
  EXPECT_GT(d.source.accesses(), 0u);
  EXPECT_GT(d.val.accesses(), 0u);
}

TEST_F(TempDir, DeterministicRunLogs) {
  TrainData d1 = small_data(), d2 = small_data();
  const RunConfig c = small_config(TrainMode::kMultiTask, 5);
  train_variant(TrainMode::kMultiTask, c, d1, options("a"));
  train_variant(TrainMode::kMultiTask, c, d2, options("b"));
  EXPECT_EQ(read_file(dir_ / "a" / "run.tsv"), read_file(dir_ / "b" / "run.tsv"));
}

TEST_F(TempDir, ResumeReplaysBitwise) {
  RunConfig c = small_config(TrainMode::kMultiTask, 9);
  c.train.total_steps = 50;
  TrainData d1 = small_data(), d2 = small_data();
  {
    Trainer t(c);
    fit(t, d1, options("full"));
  }
  {
    Trainer t(c);
    FitOptions o = options("resumed");
    o.stop_at = 30;
    fit(t, d2, o);
  }
  // Fresh process state: only the checkpoint and the run log survive.
  Trainer resumed(c);
  resumed.load((dir_ / "resumed" / checkpoint_file_name(20)).string());
  EXPECT_EQ(resumed.step(), 20);
  const FitResult r = fit(resumed, d2, options("resumed"));
  EXPECT_EQ(r.steps, 50);
  EXPECT_EQ(read_file(dir_ / "full" / "run.tsv"), read_file(dir_ / "resumed" / "run.tsv"));
  const Checkpoint a = load_checkpoint((dir_ / "full" / "step_50.ckpt").string());
  const Checkpoint b = load_checkpoint((dir_ / "resumed" / "step_50.ckpt").string());
  EXPECT_EQ(a.arrays, b.arrays);
  EXPECT_EQ(a.best_miou, b.best_miou);
  EXPECT_EQ(a.meta.at("validations"), b.meta.at("validations"));
  ASSERT_EQ(r.validations.size(), 5u);
}

TEST_F(TempDir, RestoreRejectsModeMismatch) {
  TrainData d = small_data();
  Trainer t(small_config(TrainMode::kTransferLearning));
  t.save((dir_ / "tl.ckpt").string());
  Trainer other(small_config(TrainMode::kMultiTask));
  EXPECT_THROW(other.load((dir_ / "tl.ckpt").string()), ConfigError);
}

}  // namespace
}  // namespace roadmtl
