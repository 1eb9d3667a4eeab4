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

#include "roadmtl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "roadmtl/error.hpp"
#include "roadmtl/random.hpp"

namespace roadmtl {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "# roadmtl-manifest v1";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataError(context + ": '" + s + "' is not a finite number");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "' (train, val, test)");
}

std::string DatasetManifest::image_path(const ManifestEntry& e) const {
  return (fs::path(root) / e.image).string();
}

std::string DatasetManifest::mask_path(const ManifestEntry& e) const {
  return e.mask ? (fs::path(root) / *e.mask).string() : std::string();
}

std::string manifest_path(const std::string& root, Split split) {
  return (fs::path(root) / (to_string(split) + ".tsv")).string();
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  DatasetManifest m;
  m.root = fs::path(path).parent_path().string();
  if (m.root.empty()) m.root = ".";
  std::string line;
  if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0)
    throw DataError(path + ": missing manifest header");
  bool have_split = false;
  for (const std::string& field : split_tabs(line)) {
    if (field.rfind("split=", 0) == 0) {
      m.split = parse_split(field.substr(6));
      have_split = true;
    } else if (field.rfind("max_angle=", 0) == 0) {
      m.max_angle = parse_double(field.substr(10), path + " max_angle");
    }
  }
  if (!have_split) throw DataError(path + ": header lacks split=");
  if (!(m.max_angle > 0.0)) throw DataError(path + ": max_angle must be > 0");
  if (!std::getline(in, line) || split_tabs(line).size() != 5 ||
      split_tabs(line)[0] != "id") {
    throw DataError(path + ": missing column header");
  }
  std::vector<std::string> missing;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 5) throw DataError(where + ": expected 5 columns");
    ManifestEntry e;
    e.id = f[0];
    e.image = f[1];
    if (f[2] != "-") e.mask = f[2];
    if (f[3] != "-") e.angle = parse_double(f[3], where + " angle");
    if (f[4] != "-") e.timestamp = parse_double(f[4], where + " timestamp");
    if (!fs::exists(m.image_path(e)) || (e.mask && !fs::exists(m.mask_path(e))))
      missing.push_back(e.id);
    m.entries.push_back(std::move(e));
  }
  if (!missing.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i)
      ids += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) ids += ", ...";
    throw DataError(path + ": missing files for " +
                    std::to_string(missing.size()) + " entries: " + ids);
  }
  return m;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path);
  out << kMagic << "\tsplit=" << to_string(manifest.split)
      << "\tmax_angle=" << format_double(manifest.max_angle) << "\n";
  out << "id\timage\tmask\tangle\ttimestamp\n";
  for (const ManifestEntry& e : manifest.entries) {
    out << e.id << '\t' << e.image << '\t' << (e.mask ? *e.mask : "-") << '\t'
        << (e.angle ? format_double(*e.angle) : "-") << '\t'
        << (e.timestamp ? format_double(*e.timestamp) : "-") << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path);
}

Sample load_sample(const DatasetManifest& manifest, const ManifestEntry& e,
                   DatasetKind kind) {
  Sample s;
  s.id = e.id;
  s.kind = kind;
  s.image = read_image(manifest.image_path(e));
  if (e.mask) {
    s.road_mask = read_mask(manifest.mask_path(e));
    if (s.road_mask->h != s.image.h || s.road_mask->w != s.image.w)
      throw DataError(e.id + ": mask and image sizes differ");
  }
  if (e.angle) s.steer_angle = *e.angle / manifest.max_angle;
  return s;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest,
                                 DatasetKind kind) {
  std::vector<Sample> out;
  out.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries)
    out.push_back(load_sample(manifest, e, kind));
  return out;
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size,
                           std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed) {
  if (batch_size == 0) throw ContractError("batch size must be positive");
}

const std::vector<std::size_t>& BatchSampler::permutation(
    std::uint64_t epoch) const {
  if (epoch != cached_epoch_) {
    cached_.resize(n_);
    std::iota(cached_.begin(), cached_.end(), std::size_t{0});
    nn::Rng rng = derived_rng(seed_, {epoch});
    std::shuffle(cached_.begin(), cached_.end(), rng);
    cached_epoch_ = epoch;
  }
  return cached_;
}

std::vector<std::size_t> BatchSampler::batch(std::uint64_t index) const {
  if (n_ == 0) throw ContractError("cannot sample batches from an empty set");
  std::vector<std::size_t> out;
  out.reserve(batch_size_);
  const std::uint64_t first = index * batch_size_;
  for (std::size_t j = 0; j < batch_size_; ++j) {
    const std::uint64_t k = first + j;
    out.push_back(permutation(k / n_)[k % n_]);
  }
  return out;
}

std::size_t BatchSampler::batches_per_epoch() const {
  return n_ / batch_size_;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed,
                                                    std::uint64_t epoch) {
  if (batch_size == 0) throw ContractError("batch size must be positive");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  nn::Rng rng = derived_rng(seed, {epoch});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    out.emplace_back(perm.begin() + i,
                     perm.begin() + std::min(n, i + batch_size));
  }
  return out;
}

}  // namespace roadmtl
