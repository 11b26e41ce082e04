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
#include <vector>

#include "gacse/model.hpp"

namespace gacse {

struct AdamConfig {
  Real learning_rate = 1e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
  // Lazy updates for the embedding tables: rows the batch did not touch keep
  // their parameters, moments and step counts.
  bool sparse = true;
};

struct AdamState {
  AdamConfig config;
  Tables m;
  Tables v;
  std::uint64_t step = 0;
  // Per-row update counts for E, E_UC, E_IC; drive bias correction in sparse mode.
  std::vector<std::uint64_t> row_steps_embedding;
  std::vector<std::uint64_t> row_steps_user_context;
  std::vector<std::uint64_t> row_steps_item_context;
};

AdamState make_adam_state(const Model& model, const AdamConfig& config);

// One bias-corrected Adam update. Throws kNumeric, before touching anything,
// if a gradient entry is not finite.
void adam_step(Model& model, const GradientSet& grads, AdamState& state);

}  // namespace gacse
