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

#include <cmath>
#include <random>
#include <vector>

#include "roadmtl/backbone.hpp"
#include "roadmtl/error.hpp"
#include "roadmtl/losses.hpp"
#include "roadmtl/model.hpp"
#include "roadmtl/mti.hpp"
#include "test_util.hpp"

namespace roadmtl {
namespace {

using testing::random_tensor;
using testing::tiny_model_config;

double abs_diff(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    d += std::fabs(a.data()[i] - b.data()[i]);
  return d;
}

TEST(Backbone, LevelSizes) {
  EXPECT_EQ(pyramid_level_size(320, 1216, 0), std::make_pair(80, 304));
  EXPECT_EQ(pyramid_level_size(320, 1216, 3), std::make_pair(10, 38));
  EXPECT_EQ(pyramid_level_size(768, 1024, 1), std::make_pair(96, 128));
  EXPECT_EQ(pyramid_level_size(768, 1024, 3), std::make_pair(24, 32));
}

TEST(Backbone, ReferenceTinyPyramid) {
  nn::Rng rng(1);
  BackboneConfig cfg;
  Backbone bb(cfg, rng);
  FeaturePyramid p = extract_pyramid(random_tensor({1, 3, 64, 64}, rng), bb);
  const int sizes[] = {16, 8, 4, 2};
  for (int i = 0; i < 4; ++i)
    EXPECT_EQ(p.levels[i].shape(), (Shape{1, 8, sizes[i], sizes[i]}));
}

TEST(Backbone, Pyramid128Channels) {
  nn::Rng rng(1);
  BackboneConfig cfg;
  cfg.kind = BackboneKind::kPyramid128;
  cfg.channels = {128, 128, 128, 128};
  Backbone bb(cfg, rng);
  NoGradGuard g;
  FeaturePyramid p = extract_pyramid(random_tensor({1, 3, 64, 96}, rng), bb);
  EXPECT_EQ(p.levels[0].shape(), (Shape{1, 128, 16, 24}));
  EXPECT_EQ(p.levels[3].shape(), (Shape{1, 128, 2, 3}));
  cfg.channels = {64, 128, 128, 128};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Backbone, Errors) {
  nn::Rng rng(1);
  Backbone bb(BackboneConfig{}, rng);
  try {
    extract_pyramid(Tensor::zeros({1, 3, 64, 70}), bb);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("width"), std::string::npos);
  }
  try {
    extract_pyramid(Tensor::zeros({1, 3, 48, 64}), bb);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("height"), std::string::npos);
  }
  BackboneConfig bad;
  bad.channels = {8, 8, 8};
  EXPECT_THROW(bad.validate(), ConfigError);
  BackboneConfig custom;
  custom.kind = BackboneKind::kCustom;
  EXPECT_THROW(custom.validate(), ConfigError);
}

TEST(Backbone, Deterministic) {
  nn::Rng rng(1);
  Backbone bb(BackboneConfig{}, rng);
  Tensor x = random_tensor({2, 3, 64, 64}, rng);
  FeaturePyramid a = extract_pyramid(x, bb);
  FeaturePyramid b = extract_pyramid(x, bb);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(abs_diff(a.levels[i], b.levels[i]), 0.0);
}

TEST(Mti, InitialPredictionShapes) {
  nn::Rng rng(2);
  InitialTaskPrediction coarse(3, 8, 16, rng);
  InitialPrediction p = coarse.forward(random_tensor({1, 8, 10, 38}, rng), {});
  EXPECT_EQ(p.seg_logits.shape(), (Shape{1, 1, 10, 38}));
  EXPECT_EQ(p.steer_feature.shape(), (Shape{1, 4, 10, 38}));

  InitialTaskPrediction fine(2, 8, 16, rng);
  TaskFeatures prop{random_tensor({1, 16, 4, 4}, rng),
                    random_tensor({1, 16, 4, 4}, rng)};
  InitialPrediction q = fine.forward(random_tensor({1, 8, 4, 4}, rng), prop);
  EXPECT_EQ(q.seg_logits.shape(), (Shape{1, 1, 4, 4}));
  EXPECT_EQ(q.steer_feature.shape(), (Shape{1, 4, 4, 4}));

  TaskFeatures bad{random_tensor({1, 16, 5, 4}, rng),
                   random_tensor({1, 16, 5, 4}, rng)};
  EXPECT_THROW(fine.forward(random_tensor({1, 8, 4, 4}, rng), bad), ShapeError);
  EXPECT_THROW(fine.forward(random_tensor({1, 8, 4, 4}, rng), {}),
               ContractError);
}

TEST(Mti, PropagationDoublesSize) {
  nn::Rng rng(2);
  InitialTaskPrediction coarse(3, 8, 16, rng);
  FeaturePropagation prop(3, 16, rng);
  InitialPrediction p = coarse.forward(random_tensor({1, 8, 10, 38}, rng), {});
  TaskFeatures f = prop.forward(p);
  EXPECT_EQ(f[0].shape(), (Shape{1, 16, 20, 76}));
  EXPECT_EQ(f[1].shape(), (Shape{1, 16, 20, 76}));
  p.scale_index = 0;
  EXPECT_THROW(prop.forward(p), ContractError);
  EXPECT_THROW(FeaturePropagation(0, 16, rng), ContractError);
}

TEST(Mti, DistillationIsCrossTask) {
  nn::Rng rng(4);
  MultiModalDistillation dist(8, rng);
  NoGradGuard g;
  InitialPrediction p;
  p.seg_logits = random_tensor({1, 1, 40, 152}, rng);
  p.steer_feature = random_tensor({1, 4, 40, 152}, rng);
  p.features = {random_tensor({1, 8, 40, 152}, rng),
                random_tensor({1, 8, 40, 152}, rng)};
  TaskFeatures a = dist.forward(p);
  EXPECT_EQ(a[0].shape(), (Shape{1, 8, 40, 152}));
  EXPECT_EQ(abs_diff(a[0], dist.forward(p)[0]), 0.0);
  InitialPrediction q = p;
  q.features[1] = Tensor::zeros(p.features[1].shape());
  EXPECT_GT(abs_diff(a[0], dist.forward(q)[0]), 0.0);
  q = p;
  q.steer_feature = Tensor::zeros(p.steer_feature.shape());
  EXPECT_GT(abs_diff(a[0], dist.forward(q)[0]), 0.0);
  q = p;
  q.features[0] = Tensor::zeros(p.features[0].shape());
  EXPECT_GT(abs_diff(a[1], dist.forward(q)[1]), 0.0);
}

TEST(Mti, AggregationOutputs) {
  nn::Rng rng(4);
  FeatureAggregation seg(Task::kSegmentation, 8, rng);
  FeatureAggregation steer(Task::kSteering, 8, rng);
  std::array<Tensor, 4> d{random_tensor({1, 8, 16, 16}, rng),
                          random_tensor({1, 8, 8, 8}, rng),
                          random_tensor({1, 8, 4, 4}, rng),
                          random_tensor({1, 8, 2, 2}, rng)};
  EXPECT_EQ(seg.forward(d, 64, 64).shape(), (Shape{1, 1, 64, 64}));
  EXPECT_EQ(steer.forward(d, 64, 64).shape(), (Shape{1, 4, 64, 64}));
  d[2] = Tensor();
  EXPECT_THROW(seg.forward(d, 64, 64), ContractError);
}

TEST(Model, TargetAndSourceOutputs) {
  nn::Rng rng(5);
  ModelConfig cfg = tiny_model_config();
  RoadMtlModel model(cfg, rng);
  NoGradGuard g;
  ModelOutputs t = model.forward(random_tensor({2, 3, 64, 64}, rng, 0, 1),
                                 DatasetKind::kTarget);
  ASSERT_TRUE(t.has_steering());
  EXPECT_EQ(t.steer_angle_final->shape(), (Shape{2, 1, 1, 1}));
  EXPECT_EQ(t.primary_seg_logits.shape(), (Shape{2, 1, 64, 64}));
  EXPECT_EQ(t.aux_seg_logits.shape(), (Shape{2, 1, 64, 64}));
  EXPECT_EQ(t.final_steer_feature.shape(), (Shape{2, 4, 64, 64}));
  for (int s = 0; s < 4; ++s) {
    const int h = 16 >> s;
    EXPECT_EQ(t.initial[s].seg_logits.shape(), (Shape{2, 1, h, h}));
    EXPECT_EQ(t.initial[s].steer_feature.shape(), (Shape{2, 4, h, h}));
    EXPECT_EQ(t.sfseg_deep[s].shape(), (Shape{2, 1, h, h}));
    EXPECT_EQ((*t.steer_angle_deep)[s].shape(), (Shape{2, 1, 1, 1}));
  }
  ModelOutputs s = model.forward(random_tensor({1, 3, 96, 64}, rng, 0, 1),
                                 DatasetKind::kSource);
  EXPECT_FALSE(s.has_steering());
  EXPECT_EQ(s.primary_seg_logits.shape(), (Shape{1, 1, 96, 64}));
  EXPECT_THROW(model.forward(Tensor::zeros({1, 3, 96, 64}), DatasetKind::kTarget),
               ContractError);
}

TEST(Model, CrossTaskFlowIntoSegmentation) {
  nn::Rng rng(6);
  RoadMtlModel model(tiny_model_config(), rng);
  NoGradGuard g;
  Tensor x = random_tensor({1, 3, 64, 64}, rng, 0, 1);
  ModelOutputs a = model.forward(x, DatasetKind::kSource);
  for (int s = 0; s < 4; ++s) {
    Tensor steer = a.initial[s].steer_feature;
    std::vector<double> v(steer.data().begin(), steer.data().end());
    for (double& e : v) e += 0.5;
    ModelOutputs b = model.forward_with_override(
        x, DatasetKind::kSource, s, Tensor::from(steer.shape(), v));
    EXPECT_GT(abs_diff(a.primary_seg_logits, b.primary_seg_logits), 1e-9) << s;
  }
}

TEST(Model, DeterministicForward) {
  nn::Rng rng(7);
  RoadMtlModel model(tiny_model_config(), rng);
  Tensor x = random_tensor({2, 3, 64, 64}, rng, 0, 1);
  NoGradGuard g;
  ModelOutputs a = model.forward(x, DatasetKind::kTarget);
  ModelOutputs b = model.forward(x, DatasetKind::kTarget);
  EXPECT_EQ(abs_diff(a.primary_seg_logits, b.primary_seg_logits), 0.0);
  EXPECT_EQ(abs_diff(*a.steer_angle_final, *b.steer_angle_final), 0.0);
}

TEST(Model, SteeringAngleDependsOnInput) {
  nn::Rng rng(8);
  RoadMtlModel model(tiny_model_config(), rng);
  model.eval();
  Tensor x = random_tensor({1, 3, 64, 64}, rng, 0, 1, true);
  model.forward(x, DatasetKind::kTarget).steer_angle_final->backward();
  double norm = 0.0;
  for (double g : x.grad()) norm += std::fabs(g);
  ASSERT_GT(norm, 0.0);
  // Spot-check a few input pixels against central differences.
  auto f = [&] { return *model.forward(x, DatasetKind::kTarget).steer_angle_final; };
  const double h = 1e-6;
  for (std::size_t idx : {100u, 2000u, 9000u}) {
    auto d = x.mutable_data();
    const double saved = d[idx];
    d[idx] = saved + h;
    const double up = testing::eval_scalar(f);
    d[idx] = saved - h;
    const double down = testing::eval_scalar(f);
    d[idx] = saved;
    EXPECT_LT(testing::relative_error(x.grad()[idx], (up - down) / (2 * h), 1e-8),
              1e-3);
  }
}

TEST(Model, SourceLossGradientsMatchFiniteDifferences) {
  nn::Rng rng(9);
  RoadMtlModel model(tiny_model_config(), rng);
  Tensor x = random_tensor({2, 3, 64, 64}, rng, 0, 1, false);
  std::vector<double> m(2 * 64 * 64);
  std::bernoulli_distribution coin(0.4);
  for (double& v : m) v = coin(rng) ? 1.0 : 0.0;
  Tensor mask = Tensor::from({2, 1, 64, 64}, m);
  LossWeights w;
  auto f = [&] {
    return source_loss(model.forward(x, DatasetKind::kSource), mask, w).total;
  };
  model.zero_grad();
  f().backward();
  auto params = model.named_parameters();
  std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    Tensor* p = params[pick(rng)].second;
    std::uniform_int_distribution<std::size_t> e(0, p->numel() - 1);
    worst = std::max(worst, testing::entry_grad_error(f, *p, e(rng)));
  }
  EXPECT_LT(worst, 1e-3);
}

}  // namespace
}  // namespace roadmtl
