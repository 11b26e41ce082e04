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
#include "gacse/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "gacse/error.hpp"

namespace gacse {

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::uint32_t sample_negative(const InteractionGraph& graph, std::uint32_t user, Rng& rng,
                              std::size_t max_retries) {
  const std::size_t m = graph.num_items();
  const auto positives = graph.neighbors(graph.user_node(user));
  if (positives.size() >= m) {
    throw Error(ErrorCategory::kSampling,
                "user " + std::to_string(user) + " has interacted with every item");
  }
  for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
    const auto item = static_cast<std::uint32_t>(uniform_index(rng, m));
    if (!graph.has_edge(user, item)) return item;
  }
  // Rejection kept failing on a dense row: pick directly from the complement.
  // Conditioned on reaching here the result is still uniform.
  std::vector<std::uint32_t> complement;
  complement.reserve(m - positives.size());
  for (std::uint32_t item = 0; item < m; ++item) {
    if (!graph.has_edge(user, item)) complement.push_back(item);
  }
  return complement[uniform_index(rng, complement.size())];
}

std::vector<TrainTriple> sample_triples(const InteractionGraph& graph, std::size_t batch_size,
                                        Rng& rng, std::size_t max_retries) {
  if (batch_size == 0) throw Error(ErrorCategory::kConfig, "batch_size must be >= 1");
  const std::size_t n = graph.num_users();
  std::vector<TrainTriple> triples;
  triples.reserve(batch_size);
  while (triples.size() < batch_size) {
    const auto user = static_cast<std::uint32_t>(uniform_index(rng, n));
    const auto items = graph.neighbors(graph.user_node(user));
    if (items.empty()) continue;  // users without training edges are never drawn
    const auto pos = graph.local_index(items[uniform_index(rng, items.size())]);
    triples.push_back({user, pos, sample_negative(graph, user, rng, max_retries)});
  }
  return triples;
}

NeighborSample sample_neighbors(const InteractionGraph& graph, NodeId node, std::size_t fan_in,
                                Rng& rng) {
  const auto all = graph.neighbors(node);
  if (all.empty()) {
    throw Error(ErrorCategory::kSampling, "node " + std::to_string(node) + " has no neighbors");
  }
  if (fan_in == 0) throw Error(ErrorCategory::kConfig, "fan_in must be >= 1");
  NeighborSample out{node, {}, fan_in};
  if (all.size() <= fan_in) {
    out.neighbors.assign(all.begin(), all.end());
    return out;
  }
  // Partial Fisher-Yates over a copy.
  std::vector<NodeId> pool(all.begin(), all.end());
  for (std::size_t k = 0; k < fan_in; ++k) {
    const std::size_t pick = k + uniform_index(rng, pool.size() - k);
    std::swap(pool[k], pool[pick]);
  }
  pool.resize(fan_in);
  out.neighbors = std::move(pool);
  return out;
}

SimilarityPairSet sample_similarity_pairs(const InteractionGraph& graph, NodeId anchor,
                                          std::size_t num_pos, std::size_t num_neg, Rng& rng,
                                          std::size_t max_retries) {
  const auto first_hop = graph.neighbors(anchor);
  if (first_hop.empty()) {
    throw Error(ErrorCategory::kSampling, "anchor " + std::to_string(anchor) + " has no neighbors");
  }
  SimilarityPairSet out{anchor, {}, {}, false};
  for (std::size_t p = 0; p < num_pos; ++p) {
    bool found = false;
    for (std::size_t attempt = 0; attempt < max_retries && !found; ++attempt) {
      const NodeId mid = first_hop[uniform_index(rng, first_hop.size())];
      const auto second_hop = graph.neighbors(mid);
      const NodeId target = second_hop[uniform_index(rng, second_hop.size())];
      if (target != anchor) {
        out.positives.push_back(target);
        found = true;
      }
    }
    if (!found) out.positives_short = true;
  }

  const bool is_user = graph.is_user(anchor);
  const std::size_t population = is_user ? graph.num_users() : graph.num_items();
  const NodeId base = is_user ? 0 : graph.item_node(0);
  if (population > 1) {
    const std::size_t anchor_local = anchor - base;
    for (std::size_t q = 0; q < num_neg; ++q) {
      // Uniform over the population with the anchor removed.
      std::size_t pick = uniform_index(rng, population - 1);
      if (pick >= anchor_local) ++pick;
      out.negatives.push_back(static_cast<NodeId>(base + pick));
    }
  }
  return out;
}

BatchSampler::BatchSampler(const InteractionGraph& graph, SamplerConfig config,
                           std::uint64_t seed)
    : graph_(graph),
      config_(config),
      triple_rng_(make_stream(seed, 1)),
      neighbor_rng_(make_stream(seed, 2)),
      similarity_rng_(make_stream(seed, 3)) {
  if (config_.batch_size == 0 || config_.fan_in == 0) {
    throw Error(ErrorCategory::kConfig, "batch_size and fan_in must be >= 1");
  }
}

MiniBatch BatchSampler::next() {
  return complete(sample_triples(graph_, config_.batch_size, triple_rng_, config_.max_retries));
}

MiniBatch BatchSampler::complete(std::vector<TrainTriple> triples) {
  MiniBatch batch;
  batch.triples = std::move(triples);

  std::unordered_set<NodeId> seen;
  auto add_target = [&](NodeId node) {
    if (seen.insert(node).second) {
      batch.neighbor_samples.push_back(
          sample_neighbors(graph_, node, config_.fan_in, neighbor_rng_));
    }
  };
  for (const TrainTriple& t : batch.triples) {
    add_target(graph_.user_node(t.user));
    add_target(graph_.item_node(t.pos_item));
    add_target(graph_.item_node(t.neg_item));
  }

  if (config_.warmup_cap > 0) {
    std::unordered_set<NodeId> warm;
    std::vector<NodeId> order;
    auto visit = [&](NodeId node) {
      if (warm.insert(node).second) order.push_back(node);
    };
    for (const NeighborSample& s : batch.neighbor_samples) {
      visit(s.node);
      for (NodeId nb : s.neighbors) visit(nb);
    }
    for (NodeId node : order) {
      if (graph_.degree(node) > config_.warmup_cap) {
        batch.warmup_samples.push_back(
            sample_neighbors(graph_, node, config_.warmup_cap, neighbor_rng_));
      }
    }
  }

  if (config_.similarity) {
    std::unordered_set<NodeId> anchors;
    for (const TrainTriple& t : batch.triples) {
      const NodeId u = graph_.user_node(t.user);
      if (anchors.insert(u).second) {
        batch.user_sim.push_back(sample_similarity_pairs(
            graph_, u, config_.num_pos, config_.num_neg, similarity_rng_, config_.max_retries));
      }
    }
    for (const TrainTriple& t : batch.triples) {
      const NodeId i = graph_.item_node(t.pos_item);
      if (anchors.insert(i).second) {
        batch.item_sim.push_back(sample_similarity_pairs(
            graph_, i, config_.num_pos, config_.num_neg, similarity_rng_, config_.max_retries));
      }
    }
  }
  return batch;
}

}  // namespace gacse
