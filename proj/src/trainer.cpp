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

#include "roadmtl/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "roadmtl/error.hpp"
#include "roadmtl/ops.hpp"
#include "roadmtl/random.hpp"

namespace roadmtl {

namespace {

enum StreamTag : std::uint64_t {
  kModelInit = 1,
  kDiscInit = 2,
  kSourceOrder = 3,
  kTargetOrder = 4,
  kSourceAugment = 5,
  kTargetAugment = 6,
};

constexpr const char* kConfigMeta = "config";
constexpr const char* kBestPathMeta = "best_checkpoint";
constexpr const char* kValidationsMeta = "validations";

std::string describe(TrainMode m) { return "mode " + to_string(m); }

std::string format_validations(const std::vector<ValidationRecord>& v) {
  std::ostringstream os;
  for (const ValidationRecord& r : v) {
    os << r.step << ' ' << format_number(r.miou) << ' '
       << format_number(r.precision) << ' ' << format_number(r.recall) << '\n';
  }
  return os.str();
}

std::vector<ValidationRecord> parse_validations(const std::string& text) {
  std::vector<ValidationRecord> out;
  std::istringstream is(text);
  ValidationRecord r;
  while (is >> r.step >> r.miou >> r.precision >> r.recall) out.push_back(r);
  return out;
}

}  // namespace

SampleSource SampleSource::in_memory(std::vector<Sample> samples) {
  SampleSource s;
  s.samples_ = std::move(samples);
  return s;
}

SampleSource SampleSource::from_manifest(DatasetManifest manifest,
                                         DatasetKind kind) {
  SampleSource s;
  s.manifest_ = std::move(manifest);
  s.kind_ = kind;
  return s;
}

std::size_t SampleSource::size() const {
  return manifest_ ? manifest_->entries.size() : samples_.size();
}

Sample SampleSource::get(std::size_t index) const {
  if (index >= size()) throw ContractError("sample index out of range");
  ++accesses_;
  if (manifest_) return load_sample(*manifest_, manifest_->entries[index], kind_);
  return samples_[index];
}

Trainer::Trainer(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::uint64_t seed = config_.train.seed;
  nn::Rng model_rng = derived_rng(seed, {kModelInit});
  model_ = std::make_unique<RoadMtlModel>(config_.model_config(), model_rng);
  nn::Rng disc_rng = derived_rng(seed, {kDiscInit});
  discriminators_ = std::make_unique<DiscriminatorPair>(
      config_.discriminator_config(), disc_rng);
  optim::SgdOptions sgd;
  sgd.lr = config_.train.sgd_lr;
  sgd.momentum = config_.train.nesterov_momentum;
  sgd.weight_decay = config_.train.weight_decay;
  sgd_ = std::make_unique<optim::Sgd>(model_->parameters(), sgd);
}

SourceBatch Trainer::source_batch(const SampleSource& source) const {
  const TrainConfig& t = config_.train;
  const DataConfig& d = config_.data;
  BatchSampler sampler(source.size(), t.source_batch,
                       derive_seed(t.seed, {kSourceOrder}));
  const auto idx = sampler.batch(static_cast<std::uint64_t>(step_));
  std::vector<Image> images;
  std::vector<Mask> masks;
  for (std::size_t slot = 0; slot < idx.size(); ++slot) {
    Sample s = source.get(idx[slot]);
    if (!s.road_mask) throw DataError(s.id + ": source sample has no road mask");
    nn::Rng rng = derived_rng(
        t.seed, {kSourceAugment, static_cast<std::uint64_t>(step_), slot});
    resize_and_random_crop(s.image, &*s.road_mask, d.source_h, d.source_w,
                           d.scale_jitter, rng);
    photometric_augment(s.image, d.photometric, rng);
    images.push_back(std::move(s.image));
    masks.push_back(std::move(*s.road_mask));
  }
  std::vector<const Image*> ip;
  std::vector<const Mask*> mp;
  for (std::size_t i = 0; i < images.size(); ++i) {
    ip.push_back(&images[i]);
    mp.push_back(&masks[i]);
  }
  return {image_batch(ip), mask_batch(mp)};
}

TargetBatch Trainer::target_batch(const SampleSource& target) const {
  const TrainConfig& t = config_.train;
  const DataConfig& d = config_.data;
  BatchSampler sampler(target.size(), t.target_batch,
                       derive_seed(t.seed, {kTargetOrder}));
  const auto idx = sampler.batch(static_cast<std::uint64_t>(step_));
  std::vector<Image> images;
  std::vector<double> angles;
  for (std::size_t slot = 0; slot < idx.size(); ++slot) {
    Sample s = target.get(idx[slot]);
    if (!s.steer_angle) throw DataError(s.id + ": target sample has no angle");
    nn::Rng rng = derived_rng(
        t.seed, {kTargetAugment, static_cast<std::uint64_t>(step_), slot});
    s.image = resize_image(s.image, d.target_h, d.target_w);
    double angle = *s.steer_angle;
    flip_augment(s.image, angle, rng, d.flip_probability);
    photometric_augment(s.image, d.photometric, rng);
    images.push_back(std::move(s.image));
    angles.push_back(angle);
  }
  std::vector<const Image*> ip;
  for (const Image& im : images) ip.push_back(&im);
  return {image_batch(ip), angle_batch(angles)};
}

StepRecord Trainer::train_step(const SourceBatch& source,
                               const TargetBatch* target) {
  const TrainConfig& t = config_.train;
  const LossWeights& w = config_.loss_weights;
  const bool single = t.mode == TrainMode::kSingleTask;
  if (single && target != nullptr)
    throw ContractError("single-task training takes no target batch");
  if (!single && target == nullptr)
    throw ContractError(describe(t.mode) + " needs a target batch");
  if (source.images.shape().n != t.source_batch)
    throw ContractError("source batch has " +
                        std::to_string(source.images.shape().n) +
                        " samples, expected " + std::to_string(t.source_batch));
  if (target != nullptr && target->images.shape().n != t.target_batch)
    throw ContractError("target batch has " +
                        std::to_string(target->images.shape().n) +
                        " samples, expected " + std::to_string(t.target_batch));

  const std::int64_t step = step_ + 1;
  StepRecord rec;
  rec.step = step;
  rec.lr = t.poly_decay ? optim::poly_lr(t.sgd_lr, step_, t.total_steps,
                                         t.poly_power)
                        : t.sgd_lr;
  sgd_->set_lr(rec.lr);
  model_->train();

  ModelOutputs src_out = model_->forward(source.images, DatasetKind::kSource);
  SourceTermSet terms;
  terms.sfseg = !single;
  SourceLossBreakdown src = source_loss(src_out, source.masks, w, terms);

  if (single) {
    model_->zero_grad();
    src.total.backward();
    sgd_->step();
    rec.source = values(src);
    step_ = step;
    return rec;
  }

  ModelOutputs tgt_out = model_->forward(target->images, DatasetKind::kTarget);
  TargetLossBreakdown tgt;
  discriminators_->train(true);
  const AdversarialStepResult adv = adversarial_step(
      *discriminators_, src_out, tgt_out, [&](const GeneratorAdvLosses& g) {
        TargetLossInputs in;
        in.gt_angles = &target->angles;
        in.d_primary = g.d_primary;
        in.d_aux = g.d_aux;
        in.step = step;
        in.with_steering = t.mode == TrainMode::kMultiTask;
        tgt = target_loss(tgt_out, in, w);
        model_->zero_grad();
        ops::add(src.total, tgt.total).backward();
        sgd_->step();
      });
  rec.source = values(src);
  rec.target = values(tgt);
  rec.discriminator = adv.discriminator;
  step_ = step;
  return rec;
}

EvalReport Trainer::evaluate(const SampleSource& samples) {
  if (samples.size() == 0) throw ContractError("evaluation set is empty");
  const DataConfig& d = config_.data;
  const bool was_training = model_->is_training();
  model_->eval();
  NoGradGuard no_grad;
  std::vector<SampleMetrics> per_sample;
  const std::size_t chunk = static_cast<std::size_t>(config_.train.val_batch);
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    const std::size_t end = std::min(samples.size(), begin + chunk);
    std::vector<Image> images;
    std::vector<Mask> gts;
    std::vector<std::string> ids;
    for (std::size_t i = begin; i < end; ++i) {
      Sample s = samples.get(i);
      if (!s.road_mask)
        throw DataError(s.id + ": evaluation sample has no road annotation");
      images.push_back(resize_image(s.image, d.target_h, d.target_w));
      gts.push_back(resize_mask(*s.road_mask, d.target_h, d.target_w));
      ids.push_back(s.id);
    }
    std::vector<const Image*> ip;
    for (const Image& im : images) ip.push_back(&im);
    const ModelOutputs out = model_->forward(image_batch(ip), DatasetKind::kTarget);
    const std::vector<Mask> preds = masks_from_logits(out.primary_seg_logits);
    for (std::size_t i = 0; i < preds.size(); ++i)
      per_sample.push_back(sample_metrics(ids[i], preds[i], gts[i]));
  }
  model_->train(was_training);
  return aggregate(std::move(per_sample));
}

bool Trainer::record_validation(const ValidationRecord& record,
                                const std::string& checkpoint_path) {
  validations_.push_back(record);
  if (record.miou > best_miou_) {
    best_miou_ = record.miou;
    best_path_ = checkpoint_path;
    return true;
  }
  return false;
}

std::vector<std::pair<std::string, std::vector<double>*>>
Trainer::state_arrays() {
  std::vector<std::pair<std::string, std::vector<double>*>> out;
  auto tensors = [&](const std::string& prefix, nn::Module& m) {
    for (auto& [name, t] : m.named_parameters())
      out.emplace_back(prefix + "param." + name, &t->node()->value);
    for (auto& [name, t] : m.named_buffers())
      out.emplace_back(prefix + "buffer." + name, &t->node()->value);
  };
  tensors("model.", *model_);
  tensors("disc_p.", discriminators_->get(Stream::kPrimary));
  tensors("disc_a.", discriminators_->get(Stream::kAuxiliary));
  for (auto& e : sgd_->state("sgd.momentum.")) out.push_back(e);
  for (auto& e : discriminators_->optimizer(Stream::kPrimary).state("adam_p."))
    out.push_back(e);
  for (auto& e : discriminators_->optimizer(Stream::kAuxiliary).state("adam_a."))
    out.push_back(e);
  return out;
}

Checkpoint Trainer::to_checkpoint() {
  Checkpoint ck;
  ck.step = step_;
  ck.best_miou = best_miou_;
  ck.meta[kConfigMeta] = config_.serialize();
  ck.meta[kBestPathMeta] = best_path_;
  ck.meta[kValidationsMeta] = format_validations(validations_);
  ck.meta["adam_p.steps"] =
      std::to_string(discriminators_->optimizer(Stream::kPrimary).steps());
  ck.meta["adam_a.steps"] =
      std::to_string(discriminators_->optimizer(Stream::kAuxiliary).steps());
  for (auto& [name, values] : state_arrays()) ck.arrays.emplace_back(name, *values);
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  const auto cfg = ck.meta.find(kConfigMeta);
  if (cfg == ck.meta.end()) throw IoError("checkpoint carries no configuration");
  const RunConfig saved = RunConfig::parse(cfg->second);
  if (saved.train.mode != config_.train.mode) {
    throw ConfigError("checkpoint was trained in " + describe(saved.train.mode) +
                      ", requested " + describe(config_.train.mode));
  }
  if (saved.model_config().backbone.channels !=
          config_.model_config().backbone.channels ||
      saved.backbone.kind != config_.backbone.kind ||
      !(saved.model.mti_width == config_.model.mti_width &&
        saved.model.aux_width == config_.model.aux_width &&
        saved.model.steer_head_width == config_.model.steer_head_width &&
        saved.model.disc_base_channels == config_.model.disc_base_channels) ||
      saved.data.target_h != config_.data.target_h ||
      saved.data.target_w != config_.data.target_w) {
    throw ConfigError("checkpoint architecture differs from the configuration");
  }
  for (auto& [name, dst] : state_arrays()) {
    const std::vector<double>* src = ck.find(name);
    if (src == nullptr) throw IoError("checkpoint lacks array " + name);
    if (src->size() != dst->size()) {
      throw IoError("checkpoint array " + name + " has " +
                    std::to_string(src->size()) + " values, expected " +
                    std::to_string(dst->size()));
    }
    *dst = *src;
  }
  auto steps = [&](const char* key) -> std::int64_t {
    const auto it = ck.meta.find(key);
    return it == ck.meta.end() ? 0 : std::stoll(it->second);
  };
  discriminators_->optimizer(Stream::kPrimary).set_steps(steps("adam_p.steps"));
  discriminators_->optimizer(Stream::kAuxiliary).set_steps(steps("adam_a.steps"));
  step_ = ck.step;
  best_miou_ = ck.best_miou;
  const auto bp = ck.meta.find(kBestPathMeta);
  best_path_ = bp == ck.meta.end() ? "" : bp->second;
  const auto vs = ck.meta.find(kValidationsMeta);
  validations_ = vs == ck.meta.end() ? std::vector<ValidationRecord>{}
                                     : parse_validations(vs->second);
  model_->zero_grad();
}

std::string run_log_header() {
  return "step\tlr\tseg_p\tseg_a\tdeep_seg\tsfseg\tdeep_sfseg\tsource_total"
         "\tsteer\tdeep_steer\tadv_p\tadv_a\tmr\ttarget_total\tdisc_p\tdisc_a";
}

std::string run_log_row(const StepRecord& r) {
  std::ostringstream os;
  auto col = [&](double v) { os << '\t' << format_number(v); };
  auto absent = [&] { os << "\t-"; };
  os << r.step;
  col(r.lr);
  col(r.source.seg_p);
  col(r.source.seg_a);
  col(r.source.deep_seg);
  col(r.source.sfseg);
  col(r.source.deep_sfseg);
  col(r.source.total);
  if (r.target) {
    const TargetLossValues& t = *r.target;
    if (t.steer_active) {
      col(t.steer);
      col(t.deep_steer);
    } else {
      absent();
      absent();
    }
    col(t.adv_p);
    col(t.adv_a);
    if (t.mr_active) col(t.mr);
    else absent();
    col(t.total);
  } else {
    for (int i = 0; i < 6; ++i) absent();
  }
  if (r.discriminator) {
    col(r.discriminator->primary);
    col(r.discriminator->auxiliary);
  } else {
    absent();
    absent();
  }
  return os.str();
}

std::string checkpoint_file_name(std::int64_t step) {
  std::ostringstream os;
  os << "step_" << step << ".ckpt";
  return os.str();
}

namespace {

// Keeps the header and rows with step <= `step`.
void truncate_run_log(const std::filesystem::path& path, std::int64_t step) {
  std::vector<std::string> keep;
  {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.front() == 's') {
        keep.push_back(line);
        continue;
      }
      if (std::stoll(line.substr(0, line.find('\t'))) <= step) keep.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot rewrite run log " + path.string());
  for (const std::string& l : keep) out << l << '\n';
}

}  // namespace

FitResult fit(Trainer& trainer, TrainData& data, const FitOptions& options) {
  const TrainConfig& t = trainer.config().train;
  const std::int64_t last = options.stop_at ? std::min(*options.stop_at, t.total_steps)
                                            : t.total_steps;
  FitResult result;
  const std::filesystem::path dir(options.run_dir);
  const std::filesystem::path log_path = dir / "run.tsv";
  if (trainer.step() < last) {
    std::filesystem::create_directories(dir);
    if (std::filesystem::exists(log_path) && trainer.step() > 0) {
      truncate_run_log(log_path, trainer.step());
    } else {
      std::ofstream fresh(log_path, std::ios::trunc);
      if (!fresh) throw IoError("cannot create run log " + log_path.string());
      fresh << run_log_header() << '\n';
    }
  }
  const bool single = t.mode == TrainMode::kSingleTask;
  std::ofstream log;
  if (trainer.step() < last) {
    log.open(log_path, std::ios::app);
    if (!log) throw IoError("cannot append to run log " + log_path.string());
  }
  while (trainer.step() < last) {
    const std::int64_t next = trainer.step() + 1;
    StepRecord rec;
    try {
      const SourceBatch sb = trainer.source_batch(data.source);
      if (single) {
        rec = trainer.train_step(sb, nullptr);
      } else {
        const TargetBatch tb = trainer.target_batch(data.target);
        rec = trainer.train_step(sb, &tb);
      }
    } catch (const IoError& e) {
      throw IoError("step " + std::to_string(next) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("step " + std::to_string(next) + ": " + e.what());
    }
    log << run_log_row(rec) << '\n';
    log.flush();
    if (options.on_step) options.on_step(rec);

    if (rec.step % t.val_every == 0) {
      const EvalReport report = trainer.evaluate(data.val);
      const ValidationRecord v{rec.step, report.miou, report.precision,
                               report.recall};
      const std::string path = (dir / checkpoint_file_name(rec.step)).string();
      const bool best = trainer.record_validation(v, path);
      try {
        trainer.save(path);
        if (best) {
          std::filesystem::copy_file(path, dir / "best.ckpt",
                                     std::filesystem::copy_options::overwrite_existing);
        }
      } catch (const std::filesystem::filesystem_error& e) {
        throw IoError("step " + std::to_string(rec.step) + ": " + e.what());
      } catch (const IoError& e) {
        throw IoError("step " + std::to_string(rec.step) + ": " + e.what());
      }
      if (options.on_validation) options.on_validation(v);
    }
  }
  result.steps = trainer.step();
  result.best_val_miou = trainer.best_val_miou();
  result.best_checkpoint_path = trainer.best_checkpoint_path();
  result.validations = trainer.validations();
  return result;
}

FitResult train_variant(TrainMode mode, RunConfig config, TrainData& data,
                        const FitOptions& options) {
  config.train.mode = mode;
  Trainer trainer(std::move(config));
  return fit(trainer, data, options);
}

}  // namespace roadmtl
