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

#include <optional>
#include <span>
#include <vector>

#include "gacse/graph.hpp"
#include "gacse/model.hpp"

namespace gacse {

struct MetricsReport {
  double recall = 0;
  double ndcg = 0;
  std::size_t k = 20;
  std::size_t num_users_evaluated = 0;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

enum class EvalSplit { kValidation, kTest };

// Items sorted by descending score, ties by ascending index, with the sorted
// `exclude` list removed.
std::vector<std::uint32_t> rank_items(std::span<const Real> scores,
                                      std::span<const std::uint32_t> exclude);

// Both return nullopt when the held-out set is empty (the user is skipped).
// `held_out` must be sorted.
std::optional<double> recall_at_k(std::span<const std::uint32_t> ranked,
                                  std::span<const std::uint32_t> held_out, std::size_t k);
// Binary relevance, log2 discount, ideal DCG over min(|held_out|, k) hits.
std::optional<double> ndcg_at_k(std::span<const std::uint32_t> ranked,
                                std::span<const std::uint32_t> held_out, std::size_t k);

// Uniform average over users with a non-empty held-out list. Per-user lists
// are indexed by user; `exclude` may be empty (no exclusions).
MetricsReport evaluate_rankings(const Matrix& final_embeddings, std::size_t num_users,
                                const std::vector<std::vector<std::uint32_t>>& held_out,
                                const std::vector<std::vector<std::uint32_t>>& exclude,
                                std::size_t k, Exec exec = Exec::kSerial);

struct EvalOptions {
  std::size_t k = 20;
  // Also drop validation pairs from the candidates when scoring the test split.
  bool exclude_validation = false;
  Exec exec = Exec::kSerial;
};

// Full-ranking evaluation with training positives removed from the candidates.
MetricsReport evaluate(const Model& model, const SplitDataset& dataset, EvalSplit split,
                       const EvalOptions& options = {});

// Ranks every item for each user with a held-out pair; nothing is excluded.
// Used to measure how well the training set itself is recovered.
MetricsReport evaluate_unfiltered(const Model& model, const InteractionGraph& graph,
                                  std::span<const Interaction> held_out, std::size_t k,
                                  Exec exec = Exec::kSerial);

}  // namespace gacse
