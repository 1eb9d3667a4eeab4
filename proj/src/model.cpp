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

#include "roadmtl/model.hpp"

#include <string>

#include "roadmtl/error.hpp"

namespace roadmtl {

std::string to_string(DatasetKind kind) {
  return kind == DatasetKind::kSource ? "source" : "target";
}

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "source") return DatasetKind::kSource;
  if (s == "target") return DatasetKind::kTarget;
  throw ConfigError("unknown dataset kind '" + s + "'");
}

void ModelConfig::validate() const {
  backbone.validate();
  if (mti_width <= 0 || aux_width <= 0 || steer_head_width <= 0)
    throw ConfigError("network widths must be positive");
  if (target_h <= 0 || target_w <= 0 || target_h % 32 != 0 ||
      target_w % 32 != 0) {
    throw ConfigError("target resolution " + std::to_string(target_h) + "x" +
                      std::to_string(target_w) +
                      " must be positive multiples of 32");
  }
}

RoadMtlModel::RoadMtlModel(const ModelConfig& config, nn::Rng& rng)
    : config_(config) {
  config_.validate();
  const int d = config_.mti_width;
  backbone_ = register_module("backbone",
                              std::make_shared<Backbone>(config_.backbone, rng));
  const std::vector<int>& ch = config_.backbone.channels;
  for (int s = 3; s >= 0; --s) {
    initial_[s] = register_module(
        "initial" + std::to_string(s),
        std::make_shared<InitialTaskPrediction>(s, ch[s], d, rng));
    if (s >= 1) {
      propagate_[s - 1] = register_module(
          "propagate" + std::to_string(s),
          std::make_shared<FeaturePropagation>(s, d, rng));
    }
  }
  for (int s = 0; s < 4; ++s) {
    distill_[s] = register_module("distill" + std::to_string(s),
                                  std::make_shared<MultiModalDistillation>(d, rng));
  }
  aggregate_seg_ = register_module(
      "aggregate_seg",
      std::make_shared<FeatureAggregation>(Task::kSegmentation, d, rng));
  aggregate_steer_ = register_module(
      "aggregate_steer",
      std::make_shared<FeatureAggregation>(Task::kSteering, d, rng));
  aux_head_ = register_module(
      "aux_head", std::make_shared<AuxSegHead>(ch, config_.aux_width, rng));
  for (int i = 0; i < 5; ++i) {
    sfseg_heads_[i] = register_module("sfseg" + std::to_string(i),
                                      std::make_shared<SteeringFeatureSegHead>(rng));
  }
  const int w = config_.steer_head_width;
  steer_heads_[0] = register_module(
      "steer0", std::make_shared<SteeringHead>(
                    SteeringHeadSpec::for_input(ScaleTag::kFull, config_.target_h,
                                                config_.target_w, w),
                    rng));
  for (int s = 0; s < 4; ++s) {
    auto [h, wd] = pyramid_level_size(config_.target_h, config_.target_w, s);
    steer_heads_[s + 1] = register_module(
        "steer" + std::to_string(s + 1),
        std::make_shared<SteeringHead>(
            SteeringHeadSpec::for_input(scale_tag_for_level(s), h, wd, w), rng));
  }
}

ModelOutputs RoadMtlModel::forward(const Tensor& image, DatasetKind kind) {
  return run(image, kind, -1, nullptr);
}

ModelOutputs RoadMtlModel::forward_with_override(const Tensor& image,
                                                 DatasetKind kind, int scale,
                                                 const Tensor& override_steer) {
  return run(image, kind, scale, &override_steer);
}

ModelOutputs RoadMtlModel::run(const Tensor& image, DatasetKind kind,
                               int override_scale,
                               const Tensor* override_steer) {
  const Shape& s = image.shape();
  if (kind == DatasetKind::kTarget &&
      (s.h != config_.target_h || s.w != config_.target_w)) {
    throw ContractError("target images must be " +
                        std::to_string(config_.target_h) + "x" +
                        std::to_string(config_.target_w) + ", got " + s.str());
  }
  Tensor x = normalize_image(image, config_.backbone.norm_mean,
                             config_.backbone.norm_std);
  FeaturePyramid pyr = extract_pyramid(x, *backbone_);

  ModelOutputs out;
  std::optional<TaskFeatures> propagated;
  for (int sc = 3; sc >= 0; --sc) {
    InitialPrediction pred = initial_[sc]->forward(pyr.levels[sc], propagated);
    if (sc == override_scale) {
      if (override_steer->shape() != pred.steer_feature.shape()) {
        throw ShapeError("override steering feature " +
                         override_steer->shape().str() + " vs " +
                         pred.steer_feature.shape().str());
      }
      pred.steer_feature = *override_steer;
    }
    if (sc >= 1) propagated = propagate_[sc - 1]->forward(pred);
    out.initial[sc] = std::move(pred);
  }

  std::array<Tensor, 4> seg_distilled;
  std::array<Tensor, 4> steer_distilled;
  for (int sc = 0; sc < 4; ++sc) {
    TaskFeatures d = distill_[sc]->forward(out.initial[sc]);
    seg_distilled[sc] = d[0];
    steer_distilled[sc] = d[1];
  }
  out.primary_seg_logits = aggregate_seg_->forward(seg_distilled, s.h, s.w);
  out.final_steer_feature = aggregate_steer_->forward(steer_distilled, s.h, s.w);
  out.aux_seg_logits = aux_head_->forward(
      std::span<const Tensor>(pyr.levels.data(), 3), s.h, s.w);

  out.sfseg_final = sfseg_heads_[0]->forward(out.final_steer_feature);
  for (int sc = 0; sc < 4; ++sc) {
    out.sfseg_deep[sc] =
        sfseg_heads_[sc + 1]->forward(out.initial[sc].steer_feature);
  }

  if (kind == DatasetKind::kTarget) {
    out.steer_angle_final = steer_heads_[0]->forward(out.final_steer_feature);
    std::array<Tensor, 4> deep;
    for (int sc = 0; sc < 4; ++sc) {
      deep[sc] = steer_heads_[sc + 1]->forward(out.initial[sc].steer_feature);
    }
    out.steer_angle_deep = deep;
  }
  return out;
}

}  // namespace roadmtl
