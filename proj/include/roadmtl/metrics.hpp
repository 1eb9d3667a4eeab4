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

// Road-area segmentation metrics: per-sample IoU, precision and recall,
// averaged over a set.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "roadmtl/data.hpp"

namespace roadmtl {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

ConfusionCounts confusion(const Mask& pred, const Mask& gt);

// 1 when both masks are empty.
double road_iou(const Mask& pred, const Mask& gt);

struct PrecisionRecall {
  double precision = 1.0;  // 1 when nothing is predicted
  double recall = 1.0;     // 1 when the ground truth is empty
};

PrecisionRecall precision_recall(const Mask& pred, const Mask& gt);

struct SampleMetrics {
  std::string id;
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  double miou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::vector<SampleMetrics> per_sample;
  std::size_t n_samples = 0;

  // One tab-separated row per sample followed by an aggregate footer.
  std::string to_text() const;
  static EvalReport from_text(const std::string& text);
};

SampleMetrics sample_metrics(const std::string& id, const Mask& pred,
                             const Mask& gt);

// Unweighted means of per-sample values. Empty input gives an empty report.
EvalReport aggregate(std::vector<SampleMetrics> per_sample);

}  // namespace roadmtl
