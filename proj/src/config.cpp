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

#include "roadmtl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "roadmtl/error.hpp"

namespace roadmtl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": '" + v + "' is not an integer");
  return out;
}

double parse_number(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key + ": '" + v + "' is not a finite number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_integer<int>(key, trim(item)));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

struct Section {
  std::string name;
  std::vector<Field> fields;
};

#define RM_DOUBLE(sec, key, expr)                                            \
  Field {                                                                    \
    key, [](const RunConfig& c) { return format_number(c.expr); },           \
        [](RunConfig& c, const std::string& v) {                             \
          c.expr = parse_number(std::string(sec) + "." + key, v);            \
        }                                                                    \
  }
#define RM_INT(sec, key, expr, T)                                            \
  Field {                                                                    \
    key, [](const RunConfig& c) { return std::to_string(c.expr); },          \
        [](RunConfig& c, const std::string& v) {                             \
          c.expr = parse_integer<T>(std::string(sec) + "." + key, v);        \
        }                                                                    \
  }
#define RM_BOOL(sec, key, expr)                                              \
  Field {                                                                    \
    key,                                                                     \
        [](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) {                             \
          c.expr = parse_bool(std::string(sec) + "." + key, v);              \
        }                                                                    \
  }
#define RM_STRING(key, expr)                                                 \
  Field {                                                                    \
    key, [](const RunConfig& c) { return c.expr; },                          \
        [](RunConfig& c, const std::string& v) { c.expr = v; }               \
  }

const std::vector<Section>& schema() {
  static const std::vector<Section> s = {
      {"backbone",
       {Field{"kind",
              [](const RunConfig& c) { return to_string(c.backbone.kind); },
              [](RunConfig& c, const std::string& v) {
                c.backbone.kind = parse_backbone_kind(v);
              }},
        Field{"channels",
              [](const RunConfig& c) { return join(c.backbone.channels); },
              [](RunConfig& c, const std::string& v) {
                c.backbone.channels = parse_int_list("backbone.channels", v);
              }},
        Field{"weights_path",
              [](const RunConfig& c) {
                return c.backbone.weights_path.value_or("");
              },
              [](RunConfig& c, const std::string& v) {
                if (v.empty()) c.backbone.weights_path.reset();
                else c.backbone.weights_path = v;
              }},
        RM_DOUBLE("backbone", "norm_mean", backbone.norm_mean),
        RM_DOUBLE("backbone", "norm_std", backbone.norm_std)}},
      {"model",
       {RM_INT("model", "mti_width", model.mti_width, int),
        RM_INT("model", "aux_width", model.aux_width, int),
        RM_INT("model", "steer_head_width", model.steer_head_width, int),
        RM_INT("model", "disc_base_channels", model.disc_base_channels, int)}},
      {"data",
       {RM_STRING("source_root", data.source_root),
        RM_STRING("target_root", data.target_root),
        RM_INT("data", "source_h", data.source_h, int),
        RM_INT("data", "source_w", data.source_w, int),
        RM_INT("data", "target_h", data.target_h, int),
        RM_INT("data", "target_w", data.target_w, int),
        Field{"drivable_ids",
              [](const RunConfig& c) { return join(c.data.drivable_ids); },
              [](RunConfig& c, const std::string& v) {
                c.data.drivable_ids = parse_int_list("data.drivable_ids", v);
              }},
        RM_DOUBLE("data", "min_road_fraction", data.min_road_fraction),
        RM_BOOL("data", "scale_jitter", data.scale_jitter.enabled),
        RM_DOUBLE("data", "scale_min", data.scale_jitter.min_scale),
        RM_DOUBLE("data", "scale_max", data.scale_jitter.max_scale),
        RM_DOUBLE("data", "brightness", data.photometric.brightness),
        RM_DOUBLE("data", "contrast", data.photometric.contrast),
        RM_DOUBLE("data", "saturation", data.photometric.saturation),
        RM_DOUBLE("data", "max_blur_sigma", data.photometric.max_blur_sigma),
        RM_DOUBLE("data", "flip_probability", data.flip_probability)}},
      {"loss_weights",
       {RM_DOUBLE("loss_weights", "lambda_aux", loss_weights.lambda_aux),
        RM_DOUBLE("loss_weights", "lambda_deep", loss_weights.lambda_deep),
        RM_DOUBLE("loss_weights", "lambda_sfseg", loss_weights.lambda_sfseg),
        RM_DOUBLE("loss_weights", "lambda_steer", loss_weights.lambda_steer),
        RM_DOUBLE("loss_weights", "lambda_adv_p", loss_weights.lambda_adv_p),
        RM_DOUBLE("loss_weights", "lambda_adv_a", loss_weights.lambda_adv_a),
        RM_DOUBLE("loss_weights", "lambda_mr", loss_weights.lambda_mr),
        RM_DOUBLE("loss_weights", "road_class_weight",
                  loss_weights.road_class_weight),
        RM_INT("loss_weights", "mr_start_step", loss_weights.mr_start_step,
               std::int64_t)}},
      {"train",
       {Field{"mode", [](const RunConfig& c) { return to_string(c.train.mode); },
              [](RunConfig& c, const std::string& v) {
                c.train.mode = parse_train_mode(v);
              }},
        RM_INT("train", "total_steps", train.total_steps, std::int64_t),
        RM_INT("train", "source_batch", train.source_batch, int),
        RM_INT("train", "target_batch", train.target_batch, int),
        RM_DOUBLE("train", "sgd_lr", train.sgd_lr),
        RM_DOUBLE("train", "nesterov_momentum", train.nesterov_momentum),
        RM_DOUBLE("train", "weight_decay", train.weight_decay),
        RM_BOOL("train", "poly_decay", train.poly_decay),
        RM_DOUBLE("train", "poly_power", train.poly_power),
        RM_DOUBLE("train", "adam_lr", train.adam_lr),
        RM_DOUBLE("train", "adam_beta1", train.adam_beta1),
        RM_DOUBLE("train", "adam_beta2", train.adam_beta2),
        RM_INT("train", "val_every", train.val_every, std::int64_t),
        RM_INT("train", "val_batch", train.val_batch, int),
        RM_INT("train", "seed", train.seed, std::uint64_t),
        RM_BOOL("train", "deterministic", train.deterministic),
        RM_STRING("checkpoint_dir", train.checkpoint_dir)}},
  };
  return s;
}

#undef RM_DOUBLE
#undef RM_INT
#undef RM_BOOL
#undef RM_STRING

}  // namespace

std::string format_number(double v) {
  char buf[512];
  const double a = std::fabs(v);
  const auto fmt = (a == 0.0 || (a >= 1e-4 && a < 1e15))
                       ? std::chars_format::fixed
                       : std::chars_format::scientific;
  const auto r = std::to_chars(buf, buf + sizeof buf, v, fmt);
  return std::string(buf, r.ptr);
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSingleTask: return "st";
    case TrainMode::kTransferLearning: return "tl";
    case TrainMode::kMultiTask: return "mtl";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "st" || s == "single_task") return TrainMode::kSingleTask;
  if (s == "tl" || s == "transfer_learning") return TrainMode::kTransferLearning;
  if (s == "mtl" || s == "multi_task") return TrainMode::kMultiTask;
  throw ConfigError("unknown training mode '" + s + "' (st, tl, mtl)");
}

void DataConfig::validate() const {
  for (int v : {source_h, source_w, target_h, target_w}) {
    if (v <= 0 || v % 32 != 0)
      throw ConfigError("image sizes must be positive multiples of 32");
  }
  if (drivable_ids.empty()) throw ConfigError("drivable_ids must not be empty");
  if (!(min_road_fraction >= 0.0 && min_road_fraction <= 1.0))
    throw ConfigError("min_road_fraction must lie in [0, 1]");
  if (!(scale_jitter.min_scale > 0.0 &&
        scale_jitter.min_scale <= scale_jitter.max_scale))
    throw ConfigError("scale jitter range must satisfy 0 < min <= max");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
    throw ConfigError("flip_probability must lie in [0, 1]");
  for (double v : {photometric.brightness, photometric.contrast,
                   photometric.saturation, photometric.max_blur_sigma}) {
    if (!(v >= 0.0)) throw ConfigError("augmentation strengths must be >= 0");
  }
}

void TrainConfig::validate() const {
  if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
  if (source_batch <= 0 || target_batch <= 0 || val_batch <= 0)
    throw ConfigError("batch sizes must be positive");
  if (val_every <= 0) throw ConfigError("val_every must be positive");
  if (total_steps % val_every != 0)
    throw ConfigError("val_every must divide total_steps");
  if (!(sgd_lr > 0.0) || !(adam_lr > 0.0))
    throw ConfigError("learning rates must be positive");
  if (!(nesterov_momentum >= 0.0 && nesterov_momentum < 1.0))
    throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
        adam_beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
}

void RunConfig::validate() const {
  model_config().validate();
  discriminator_config().validate();
  data.validate();
  loss_weights.validate();
  train.validate();
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.backbone = backbone;
  m.mti_width = model.mti_width;
  m.aux_width = model.aux_width;
  m.steer_head_width = model.steer_head_width;
  m.target_h = data.target_h;
  m.target_w = data.target_w;
  return m;
}

DiscriminatorConfig RunConfig::discriminator_config() const {
  DiscriminatorConfig d;
  d.base_channels = model.disc_base_channels;
  d.adam.lr = train.adam_lr;
  d.adam.beta1 = train.adam_beta1;
  d.adam.beta2 = train.adam_beta2;
  return d;
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  bool first = true;
  for (const Section& sec : schema()) {
    if (!first) os << '\n';
    first = false;
    os << '[' << sec.name << "]\n";
    for (const Field& f : sec.fields) {
      const std::string v = f.get(*this);
      os << f.key << " =" << (v.empty() ? "" : " ") << v << '\n';
    }
  }
  return os.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  const Section* current = nullptr;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": malformed section");
      const std::string name = trim(t.substr(1, t.size() - 2));
      current = nullptr;
      for (const Section& s : schema())
        if (s.name == name) current = &s;
      if (!current) throw ConfigError(where + ": unknown section [" + name + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (!current) throw ConfigError(where + ": key outside a section");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const Field* field = nullptr;
    for (const Field& f : current->fields)
      if (f.key == key) field = &f;
    if (!field) {
      throw ConfigError(where + ": unknown key '" + key + "' in [" +
                        current->name + "]");
    }
    field->set(c, value);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void RunConfig::save(const std::string& path) const {
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config " + path);
  out << serialize();
}

RunConfig desk_config() {
  RunConfig c;
  c.backbone.kind = BackboneKind::kReferenceTiny;
  c.backbone.channels = {16, 16, 16, 16};
  c.model = {16, 16, 16, 8};
  c.data.source_h = 64;
  c.data.source_w = 64;
  c.data.target_h = 32;
  c.data.target_w = 128;
  c.train.total_steps = 2000;
  c.train.source_batch = 4;
  c.train.target_batch = 8;
  c.train.val_every = 200;
  c.train.val_batch = 25;
  return c;
}

std::string resolve_data_root(const std::string& configured,
                              const std::string& subdir) {
  if (!configured.empty()) return configured;
  const char* env = std::getenv("ROADMTL_DATA_ROOT");
  if (env == nullptr || *env == '\0') {
    throw ConfigError("no dataset root configured and ROADMTL_DATA_ROOT is "
                      "unset");
  }
  if (subdir.empty()) return env;
  return (std::filesystem::path(env) / subdir).string();
}

}  // namespace roadmtl
