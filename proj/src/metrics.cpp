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

#include "roadmtl/metrics.hpp"

#include <charconv>
#include <sstream>

#include "roadmtl/error.hpp"

namespace roadmtl {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DataError("bad number '" + s + "' in evaluation report");
  return v;
}

}  // namespace

ConfusionCounts confusion(const Mask& pred, const Mask& gt) {
  if (pred.h != gt.h || pred.w != gt.w) {
    throw ShapeError("prediction " + std::to_string(pred.h) + "x" +
                     std::to_string(pred.w) + " vs ground truth " +
                     std::to_string(gt.h) + "x" + std::to_string(gt.w));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double road_iou(const Mask& pred, const Mask& gt) {
  const ConfusionCounts c = confusion(pred, gt);
  const std::size_t uni = c.tp + c.fp + c.fn;
  return uni == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(uni);
}

PrecisionRecall precision_recall(const Mask& pred, const Mask& gt) {
  const ConfusionCounts c = confusion(pred, gt);
  PrecisionRecall pr;
  if (c.tp + c.fp > 0)
    pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0)
    pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return pr;
}

SampleMetrics sample_metrics(const std::string& id, const Mask& pred,
                             const Mask& gt) {
  const PrecisionRecall pr = precision_recall(pred, gt);
  return {id, road_iou(pred, gt), pr.precision, pr.recall};
}

EvalReport aggregate(std::vector<SampleMetrics> per_sample) {
  EvalReport r;
  r.n_samples = per_sample.size();
  for (const SampleMetrics& s : per_sample) {
    r.miou += s.iou;
    r.precision += s.precision;
    r.recall += s.recall;
  }
  if (r.n_samples > 0) {
    const double n = static_cast<double>(r.n_samples);
    r.miou /= n;
    r.precision /= n;
    r.recall /= n;
  }
  r.per_sample = std::move(per_sample);
  return r;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "id\tiou\tprecision\trecall\n";
  for (const SampleMetrics& s : per_sample) {
    os << s.id << '\t' << fmt(s.iou) << '\t' << fmt(s.precision) << '\t'
       << fmt(s.recall) << '\n';
  }
  os << "# n=" << n_samples << "\tmiou=" << fmt(miou)
     << "\tprecision=" << fmt(precision) << "\trecall=" << fmt(recall) << '\n';
  return os.str();
}

EvalReport EvalReport::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "id\tiou\tprecision\trecall")
    throw DataError("evaluation report lacks its column header");
  EvalReport r;
  bool footer = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      std::istringstream f(line.substr(2));
      std::string field;
      while (std::getline(f, field, '\t')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "n") r.n_samples = static_cast<std::size_t>(parse(val));
        else if (key == "miou") r.miou = parse(val);
        else if (key == "precision") r.precision = parse(val);
        else if (key == "recall") r.recall = parse(val);
      }
      footer = true;
      continue;
    }
    std::istringstream row(line);
    SampleMetrics s;
    std::string a, b, c;
    if (!std::getline(row, s.id, '\t') || !std::getline(row, a, '\t') ||
        !std::getline(row, b, '\t') || !std::getline(row, c, '\t')) {
      throw DataError("malformed evaluation row '" + line + "'");
    }
    s.iou = parse(a);
    s.precision = parse(b);
    s.recall = parse(c);
    r.per_sample.push_back(s);
  }
  if (!footer) throw DataError("evaluation report lacks its footer");
  return r;
}

}  // namespace roadmtl
