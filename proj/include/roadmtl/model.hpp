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

// The full road/steering multi-task network.

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "roadmtl/backbone.hpp"
#include "roadmtl/heads.hpp"
#include "roadmtl/mti.hpp"
#include "roadmtl/types.hpp"

namespace roadmtl {

struct ModelConfig {
  BackboneConfig backbone;
  int mti_width = 64;
  int aux_width = 64;
  int steer_head_width = 64;
  // Resolution of target-domain camera images; steering heads are built for
  // this size.
  int target_h = 320;
  int target_w = 1216;

  void validate() const;
};

struct ModelOutputs {
  Tensor primary_seg_logits;   // N x 1 x H x W
  Tensor aux_seg_logits;       // N x 1 x H x W
  Tensor final_steer_feature;  // N x 4 x H x W
  std::array<InitialPrediction, 4> initial;
  // Steering-feature segmentation: on the final steering feature and on the
  // steering feature of each initial scale.
  Tensor sfseg_final;               // N x 1 x H x W
  std::array<Tensor, 4> sfseg_deep;  // N x 1 x h_i x w_i
  // Present only for target-resolution inputs run as kTarget.
  std::optional<Tensor> steer_angle_final;  // N x 1 x 1 x 1
  std::optional<std::array<Tensor, 4>> steer_angle_deep;

  bool has_steering() const { return steer_angle_final.has_value(); }
};

class RoadMtlModel : public nn::Module {
 public:
  RoadMtlModel(const ModelConfig& config, nn::Rng& rng);

  // `image` holds raw N x 3 x H x W values in [0,1]; normalization happens
  // inside.
  ModelOutputs forward(const Tensor& image, DatasetKind kind);

  const ModelConfig& config() const { return config_; }
  Backbone& backbone() { return *backbone_; }
  SteeringHead& steering_head(int index) { return *steer_heads_[index]; }
  InitialTaskPrediction& initial_prediction(int scale) {
    return *initial_[scale];
  }
  MultiModalDistillation& distillation(int scale) { return *distill_[scale]; }

  // Forward pass with the steering initial feature of `scale` replaced by
  // `override_steer` (same shape). Used to probe cross-task flow.
  ModelOutputs forward_with_override(const Tensor& image, DatasetKind kind,
                                     int scale, const Tensor& override_steer);

 private:
  ModelOutputs run(const Tensor& image, DatasetKind kind, int override_scale,
                   const Tensor* override_steer);

  ModelConfig config_;
  std::shared_ptr<Backbone> backbone_;
  std::array<std::shared_ptr<InitialTaskPrediction>, 4> initial_;
  // propagate_[i] maps scale i+1 to scale i.
  std::array<std::shared_ptr<FeaturePropagation>, 3> propagate_;
  std::array<std::shared_ptr<MultiModalDistillation>, 4> distill_;
  std::shared_ptr<FeatureAggregation> aggregate_seg_;
  std::shared_ptr<FeatureAggregation> aggregate_steer_;
  std::shared_ptr<AuxSegHead> aux_head_;
  // Index 0 is the final-output head, 1..4 the initial scales 0..3.
  std::array<std::shared_ptr<SteeringFeatureSegHead>, 5> sfseg_heads_;
  std::array<std::shared_ptr<SteeringHead>, 5> steer_heads_;
};

}  // namespace roadmtl
