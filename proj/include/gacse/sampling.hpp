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

#include <cstddef>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gacse/graph.hpp"
#include "gacse/types.hpp"

namespace gacse {

// (u, i, j) with (u, i) observed and (u, j) unobserved. Indices are local.
struct TrainTriple {
  std::uint32_t user = 0;
  std::uint32_t pos_item = 0;
  std::uint32_t neg_item = 0;
  friend bool operator==(const TrainTriple&, const TrainTriple&) = default;
};

struct NeighborSample {
  NodeId node = 0;
  std::vector<NodeId> neighbors;  // global ids of the opposite side
  std::size_t fan_in = 0;
  friend bool operator==(const NeighborSample&, const NeighborSample&) = default;
};

// Same-side pairs for the similarity objective; all ids are global.
struct SimilarityPairSet {
  NodeId anchor = 0;
  std::vector<NodeId> positives;
  std::vector<NodeId> negatives;
  // Set when the graph could not supply the requested number of positives.
  bool positives_short = false;
  friend bool operator==(const SimilarityPairSet&, const SimilarityPairSet&) = default;
};

struct MiniBatch {
  std::vector<TrainTriple> triples;
  // One entry per node whose attention output is needed (every u, i, j),
  // in first-appearance order.
  std::vector<NeighborSample> neighbor_samples;
  // Capped warm-up neighborhoods, only for nodes above the warm-up cap.
  std::vector<NeighborSample> warmup_samples;
  std::vector<SimilarityPairSet> user_sim;
  std::vector<SimilarityPairSet> item_sim;

  friend bool operator==(const MiniBatch&, const MiniBatch&) = default;
};

inline constexpr std::size_t kDefaultMaxRetries = 100;

std::vector<TrainTriple> sample_triples(const InteractionGraph& graph, std::size_t batch_size,
                                        Rng& rng, std::size_t max_retries = kDefaultMaxRetries);

// Uniform over items the user has not interacted with. Throws kSampling when
// the user has interacted with every item.
std::uint32_t sample_negative(const InteractionGraph& graph, std::uint32_t user, Rng& rng,
                              std::size_t max_retries = kDefaultMaxRetries);

// Full neighborhood when degree <= fan_in, otherwise a uniform subset of size
// fan_in drawn without replacement.
NeighborSample sample_neighbors(const InteractionGraph& graph, NodeId node, std::size_t fan_in,
                                Rng& rng);

// Positives come from length-2 walks anchor -> opposite side -> same side
// that do not return to the anchor; negatives are uniform over the anchor's
// side excluding the anchor.
SimilarityPairSet sample_similarity_pairs(const InteractionGraph& graph, NodeId anchor,
                                          std::size_t num_pos, std::size_t num_neg, Rng& rng,
                                          std::size_t max_retries = kDefaultMaxRetries);

struct SamplerConfig {
  std::size_t batch_size = 1024;
  std::size_t fan_in = 64;
  std::size_t warmup_cap = 0;  // 0 means the warm-up sees full neighborhoods
  std::size_t num_pos = 5;
  std::size_t num_neg = 5;
  bool similarity = true;
  std::size_t max_retries = kDefaultMaxRetries;
};

// Draws mini-batches from independent seeded streams (triples, neighbors,
// similarity pairs) so toggling the similarity stream leaves the other two
// untouched.
class BatchSampler {
 public:
  BatchSampler(const InteractionGraph& graph, SamplerConfig config, std::uint64_t seed);

  MiniBatch next();

  // Builds the per-node samples for an explicit triple list.
  MiniBatch complete(std::vector<TrainTriple> triples);

 private:
  const InteractionGraph& graph_;
  SamplerConfig config_;
  Rng triple_rng_;
  Rng neighbor_rng_;
  Rng similarity_rng_;
};

Rng make_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace gacse
