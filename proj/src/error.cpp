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
#include "gacse/error.hpp"

namespace gacse {

const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage: return "usage";
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kEmptyDataset: return "empty_dataset";
    case ErrorCategory::kShapeMismatch: return "shape_mismatch";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kSampling: return "sampling";
    case ErrorCategory::kInvariant: return "invariant";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage: return 2;
    case ErrorCategory::kConfig: return 3;
    case ErrorCategory::kIo: return 4;
    case ErrorCategory::kParse: return 5;
    case ErrorCategory::kEmptyDataset: return 6;
    case ErrorCategory::kShapeMismatch: return 7;
    case ErrorCategory::kNumeric: return 8;
    case ErrorCategory::kSampling: return 9;
    case ErrorCategory::kInvariant: return 10;
  }
  return 1;
}

}  // namespace gacse
