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

#include "roadmtl/commands.hpp"

#include <algorithm>
#include <filesystem>

#include "roadmtl/error.hpp"
#include "roadmtl/random.hpp"
#include "roadmtl/synth.hpp"
#include "roadmtl/visualize.hpp"

namespace roadmtl {

namespace fs = std::filesystem;

namespace {

constexpr Rgb kGroundTruthColour{0.0, 1.0, 0.0};
constexpr Rgb kPredictionColour{1.0, 0.0, 1.0};

std::string png(const std::string& dir, const std::string& id) {
  return dir + "/" + id + ".png";
}

void write_split(const std::string& root, Split split,
                 const std::vector<Sample>& samples) {
  DatasetManifest m;
  m.root = root;
  m.split = split;
  m.max_angle = 1.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    ManifestEntry e;
    e.id = s.id;
    e.image = png("images", s.id);
    write_image((fs::path(root) / e.image).string(), s.image);
    if (s.road_mask) {
      e.mask = png("masks", s.id);
      write_mask((fs::path(root) / *e.mask).string(), *s.road_mask);
    }
    if (s.steer_angle) {
      e.angle = *s.steer_angle;
      e.timestamp = 0.1 * static_cast<double>(i);
    }
    m.entries.push_back(std::move(e));
  }
  write_manifest(manifest_path(root, split), m);
}

std::string target_root(const RunConfig& c) {
  return resolve_data_root(c.data.target_root, "target");
}

}  // namespace

PreprocessSummary run_preprocess(const PreprocessOptions& o) {
  const fs::path images = fs::path(o.src_root) / "images";
  const fs::path labels = fs::path(o.src_root) / "labels";
  if (!fs::is_directory(images) || !fs::is_directory(labels)) {
    throw DataError(o.src_root + " lacks images/ and labels/ directories");
  }
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(images))
    if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
  std::sort(ids.begin(), ids.end());

  PreprocessSummary summary;
  DatasetManifest manifest;
  manifest.root = o.out_root;
  manifest.split = o.split;
  for (const std::string& id : ids) {
    Image image;
    LabelMap label;
    try {
      image = read_image((images / (id + ".png")).string());
      label = read_label_map((labels / (id + ".png")).string());
      if (label.h != image.h || label.w != image.w)
        throw DataError("label map and image sizes differ");
    } catch (const Error& e) {
      summary.errors.push_back(id + ": " + e.what());
      continue;
    }
    Mask mask = merge_road_classes(label, o.class_ids);
    if (!keep_by_road_fraction(mask, o.min_road_fraction)) {
      summary.dropped.push_back(id);
      continue;
    }
    crop_top_quarter(image, &mask);
    image = resize_image(image, o.out_h, o.out_w);
    mask = resize_mask(mask, o.out_h, o.out_w);
    ManifestEntry e;
    e.id = id;
    e.image = png("images", id);
    e.mask = png("masks", id);
    write_image((fs::path(o.out_root) / e.image).string(), image);
    write_mask((fs::path(o.out_root) / *e.mask).string(), mask);
    manifest.entries.push_back(std::move(e));
    summary.kept.push_back(id);
  }
  write_manifest(manifest_path(o.out_root, o.split), manifest);
  return summary;
}

void run_synth(const SynthOptions& o) {
  const Weather source_weather[] = {Weather::kClear};
  const Weather target_weather[] = {Weather::kSnow, Weather::kGravel};
  const std::string source = (fs::path(o.out_root) / "source").string();
  const std::string target = (fs::path(o.out_root) / "target").string();
  write_split(source, Split::kTrain,
              generate_synth_set(SynthRole::kSource, o.n_source, o.source_h,
                                 o.source_w, source_weather, o.seed));
  write_split(target, Split::kTrain,
              generate_synth_set(SynthRole::kTarget, o.n_target, o.target_h,
                                 o.target_w, target_weather, o.seed));
  // Val and test draw from independent seeds of the annotated role.
  write_split(target, Split::kVal,
              generate_synth_set(SynthRole::kAnnotatedTarget, o.n_val, o.target_h,
                                 o.target_w, target_weather, derive_seed(o.seed, {1})));
  write_split(target, Split::kTest,
              generate_synth_set(SynthRole::kAnnotatedTarget, o.n_test, o.target_h,
                                 o.target_w, target_weather, derive_seed(o.seed, {2})));
}

TrainData load_train_data(const RunConfig& c) {
  const std::string source = resolve_data_root(c.data.source_root, "source");
  const std::string target = target_root(c);
  TrainData d;
  d.source = SampleSource::from_manifest(
      load_manifest(manifest_path(source, Split::kTrain)), DatasetKind::kSource);
  d.val = SampleSource::from_manifest(load_manifest(manifest_path(target, Split::kVal)),
                                      DatasetKind::kTarget);
  if (c.train.mode != TrainMode::kSingleTask) {
    d.target = SampleSource::from_manifest(
        load_manifest(manifest_path(target, Split::kTrain)), DatasetKind::kTarget);
  }
  return d;
}

FitResult run_train(const RunConfig& config, const std::string& out_dir,
                    const std::optional<std::string>& resume,
                    const FitOptions& hooks) {
  TrainData data = load_train_data(config);
  Trainer trainer(config);
  if (resume) trainer.load(*resume);
  fs::create_directories(out_dir);
  config.save((fs::path(out_dir) / "config.ini").string());
  FitOptions options = hooks;
  options.run_dir = out_dir;
  return fit(trainer, data, options);
}

std::unique_ptr<Trainer> trainer_from_checkpoint(
    const std::string& path, const std::optional<TrainMode>& mode) {
  const Checkpoint ck = load_checkpoint(path);
  const auto it = ck.meta.find("config");
  if (it == ck.meta.end()) throw IoError(path + ": checkpoint carries no configuration");
  RunConfig config = RunConfig::parse(it->second);
  if (mode && *mode != config.train.mode) {
    throw ConfigError(path + " holds a " + to_string(config.train.mode) +
                      " model, requested " + to_string(*mode));
  }
  auto trainer = std::make_unique<Trainer>(config);
  trainer->restore(ck);
  return trainer;
}

EvalReport run_eval(const std::string& checkpoint, Split split,
                    const std::optional<TrainMode>& mode) {
  auto trainer = trainer_from_checkpoint(checkpoint, mode);
  const SampleSource samples = SampleSource::from_manifest(
      load_manifest(manifest_path(target_root(trainer->config()), split)),
      DatasetKind::kTarget);
  return trainer->evaluate(samples);
}

VisualKind parse_visual_kind(const std::string& s) {
  if (s == "steer_features") return VisualKind::kSteerFeatures;
  if (s == "segmentation") return VisualKind::kSegmentation;
  throw ConfigError("unknown visualization '" + s + "' (steer_features, segmentation)");
}

std::size_t run_visualize(const std::string& checkpoint, Split split,
                          VisualKind what, const std::string& out_dir,
                          std::size_t limit, const std::optional<TrainMode>& mode) {
  auto trainer = trainer_from_checkpoint(checkpoint, mode);
  const RunConfig& c = trainer->config();
  const SampleSource samples = SampleSource::from_manifest(
      load_manifest(manifest_path(target_root(c), split)), DatasetKind::kTarget);
  RoadMtlModel& model = trainer->model();
  model.eval();
  NoGradGuard no_grad;
  std::size_t written = 0;
  const std::size_t n = std::min(limit, samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    Sample s = samples.get(i);
    s.image = resize_image(s.image, c.data.target_h, c.data.target_w);
    const Image* ims[] = {&s.image};
    const ModelOutputs out = model.forward(image_batch(ims), DatasetKind::kTarget);
    const std::string base = (fs::path(out_dir) / s.id).string();
    write_image(base + "_image.png", s.image);
    ++written;
    if (what == VisualKind::kSteerFeatures) {
      for (int ch = 0; ch < out.final_steer_feature.shape().c; ++ch) {
        write_image(base + "_steer_" + std::to_string(ch) + ".png",
                    feature_overlay(s.image, out.final_steer_feature, 0, ch));
        ++written;
      }
    } else {
      if (s.road_mask) {
        const Mask gt = resize_mask(*s.road_mask, c.data.target_h, c.data.target_w);
        write_image(base + "_gt.png", mask_overlay(s.image, gt, kGroundTruthColour));
        ++written;
      }
      const Mask pred = masks_from_logits(out.primary_seg_logits)[0];
      write_image(base + "_pred.png", mask_overlay(s.image, pred, kPredictionColour));
      ++written;
    }
  }
  return written;
}

}  // namespace roadmtl
