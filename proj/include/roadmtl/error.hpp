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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roadmtl {

// Every failure surfaced to callers carries a short machine-readable code.
// The CLI prints `<code>: <message>` on a single line.
enum class ErrorCode { kShape, kConfig, kData, kContract, kIo };

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error(ErrorCode::kShape, m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorCode::kConfig, m) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error(ErrorCode::kData, m) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& m)
      : Error(ErrorCode::kContract, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorCode::kIo, m) {}
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "E_SHAPE";
    case ErrorCode::kConfig: return "E_CONFIG";
    case ErrorCode::kData: return "E_DATA";
    case ErrorCode::kContract: return "E_CONTRACT";
    case ErrorCode::kIo: return "E_IO";
  }
  return "E_UNKNOWN";
}

}  // namespace roadmtl
