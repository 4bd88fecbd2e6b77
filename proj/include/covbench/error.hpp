// Copyright 2026 The covbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COVBENCH_ERROR_HPP
#define COVBENCH_ERROR_HPP

#include <stdexcept>
#include <string>

namespace covbench {

/// Failure categories. The CLI maps each one to a distinct exit status.
enum class ErrorKind {
  kConfig = 2,
  kIo = 3,
  kSchema = 4,
  kIdMismatch = 5,
  kData = 6,
  kMatcher = 7,
  kServe = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kIdMismatch: return "id-mismatch";
    case ErrorKind::kData: return "data";
    case ErrorKind::kMatcher: return "matcher";
    case ErrorKind::kServe: return "serve";
  }
  return "unknown";
}

}  // namespace covbench

#endif  // COVBENCH_ERROR_HPP
