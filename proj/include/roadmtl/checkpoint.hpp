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

// Versioned single-file checkpoints.
//
//   magic "RMTLCKPT" | u32 version | i64 step | f64 best_miou
//   | u32 n_meta  { str key | str value }
//   | u32 n_arrays { str name | u64 count | f64[count] }
//   | u64 FNV-1a hash of everything before it
//
// Strings are u32 length + bytes. All integers and doubles little-endian.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace roadmtl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::int64_t step = 0;
  double best_miou = 0.0;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  const std::vector<double>* find(const std::string& name) const;
};

// Writes to a temporary file, then renames it over `path`.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

// Throws IoError on unreadable or corrupt files.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace roadmtl
