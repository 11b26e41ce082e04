// Copyright 2026 The GACSE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gacse {

// Machine-readable failure classes. The CLI maps each one to a distinct exit
// code (see exit_code()).
enum class ErrorCategory {
  kUsage,
  kConfig,
  kIo,
  kParse,
  kEmptyDataset,
  kShapeMismatch,
  kNumeric,
  kSampling,
  kInvariant,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

const char* category_name(ErrorCategory category);
int exit_code(ErrorCategory category);

}  // namespace gacse
