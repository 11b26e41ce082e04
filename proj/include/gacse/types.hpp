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
#include <random>

#include <Eigen/Core>

namespace gacse {

using Real = double;

// Parameter tables are row-major so that one embedding is one contiguous row.
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Global node id. Users occupy [0, N), items occupy [N, N + M); this is also
// the row index into the base embedding table.
using NodeId = std::uint32_t;

enum class Side { kUser, kItem };

using Rng = std::mt19937_64;

// Kernel selection. kSerial is the deterministic reference path.
enum class Exec { kSerial, kParallel };

inline Real leaky_relu(Real x, Real slope) { return x > 0 ? x : slope * x; }
inline Real leaky_relu_grad(Real x, Real slope) { return x > 0 ? 1.0 : slope; }

}  // namespace gacse
