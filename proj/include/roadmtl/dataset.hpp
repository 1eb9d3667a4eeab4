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

// On-disk dataset layout, manifests and deterministic batch sampling.
//
// A dataset root holds images/<id>.png, masks/<id>.png and one manifest per
// split (<split>.tsv). Manifest format:
//
//   # roadmtl-manifest v1	split=<train|val|test>	max_angle=<double>
//   id	image	mask	angle	timestamp
//   <id>	images/<id>.png	masks/<id>.png|-	<raw angle>|-	<timestamp>|-

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roadmtl/data.hpp"

namespace roadmtl {

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string id;
  std::string image;                // relative to the root
  std::optional<std::string> mask;  // relative to the root
  std::optional<double> angle;      // raw units
  std::optional<double> timestamp;
};

struct DatasetManifest {
  std::string root;
  Split split = Split::kTrain;
  double max_angle = 1.0;
  std::vector<ManifestEntry> entries;

  std::string image_path(const ManifestEntry& e) const;
  std::string mask_path(const ManifestEntry& e) const;
};

std::string manifest_path(const std::string& root, Split split);

// Parses and validates a manifest; files listed must exist (DataError names
// the missing ids).
DatasetManifest load_manifest(const std::string& path);
void write_manifest(const std::string& path, const DatasetManifest& manifest);

// Angles are normalized by max_angle.
Sample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry,
                   DatasetKind kind);
// Loads every entry into memory.
std::vector<Sample> load_samples(const DatasetManifest& manifest,
                                 DatasetKind kind);

// Infinite stream of fixed-size batches over n items: the concatenation of
// per-epoch permutations, each drawn from (seed, epoch). Batch b is a pure
// function of b, so a run resumed at step b sees the same batches.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> batch(std::uint64_t index) const;
  // Number of whole batches in one epoch.
  std::size_t batches_per_epoch() const;
  std::size_t size() const { return n_; }

 private:
  const std::vector<std::size_t>& permutation(std::uint64_t epoch) const;

  std::size_t n_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  mutable std::uint64_t cached_epoch_ = ~0ULL;
  mutable std::vector<std::size_t> cached_;
};

// One pass over a manifest-sized index range in batches of `batch_size`
// (the last batch may be short). Empty for n == 0.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed,
                                                    std::uint64_t epoch = 0);

}  // namespace roadmtl
