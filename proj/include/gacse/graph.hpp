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
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gacse/types.hpp"

namespace gacse {

enum class DatasetFormat { kTsv, kAdjacencyList };

// Interaction log keyed by external ids. Duplicates are removed on ingest and
// the surviving pairs keep their first-appearance order.
struct RawInteractions {
  std::vector<std::pair<std::string, std::string>> pairs;
};

// A dense (user index, item index) pair.
struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// Immutable bipartite graph stored as one CSR over global node ids: users are
// [0, N), items are [N, N + M). Every neighbor list is sorted ascending, so a
// user's list is its item set and an item's list is its user set.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  // Edges must reference users < num_users and items < num_items; duplicates
  // are collapsed.
  InteractionGraph(std::size_t num_users, std::size_t num_items,
                   std::span<const Interaction> edges);

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t num_nodes() const { return num_users_ + num_items_; }
  // Number of distinct user-item interactions.
  std::size_t num_edges() const { return neighbors_.size() / 2; }

  NodeId user_node(std::uint32_t user) const { return user; }
  NodeId item_node(std::uint32_t item) const {
    return static_cast<NodeId>(num_users_ + item);
  }
  bool is_user(NodeId node) const { return node < num_users_; }
  Side side(NodeId node) const { return is_user(node) ? Side::kUser : Side::kItem; }
  std::uint32_t local_index(NodeId node) const {
    return is_user(node) ? node : static_cast<std::uint32_t>(node - num_users_);
  }

  std::span<const NodeId> neighbors(NodeId node) const {
    return {neighbors_.data() + offsets_[node], neighbors_.data() + offsets_[node + 1]};
  }
  std::size_t degree(NodeId node) const { return offsets_[node + 1] - offsets_[node]; }
  bool has_edge(std::uint32_t user, std::uint32_t item) const;

  // Raw CSR arrays, handy for kernels.
  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const NodeId> adjacency() const { return neighbors_; }

  // All edges as (user, item), ordered by user then item.
  std::vector<Interaction> edges() const;

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
};

struct SplitDataset {
  InteractionGraph train;
  std::vector<Interaction> validation;  // sorted by (user, item)
  std::vector<Interaction> test;        // sorted by (user, item)
  std::vector<std::string> user_ids;    // dense index -> external id
  std::vector<std::string> item_ids;
};

struct GraphStats {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t num_interactions = 0;
  double density = 0.0;
};

RawInteractions ingest(const std::filesystem::path& path, DatasetFormat format);
RawInteractions parse_interactions(const std::string& text, DatasetFormat format);

// Iterative peeling to the maximal subset where every user and every item has
// at least min_degree interactions. Throws kEmptyDataset when nothing survives.
RawInteractions k_core_filter(const RawInteractions& raw, std::size_t min_degree);
inline RawInteractions ten_core_filter(const RawInteractions& raw) {
  return k_core_filter(raw, 10);
}

// Per-user split: floor(train_frac * n) (at least one) of each user's pairs go
// to training, the rest to test; then floor(valid_frac * |train|) training
// pairs, drawn uniformly over all training pairs, move to validation.
// A held-out pair is never allowed to leave its user or item without a
// training edge. Requires train_frac in (0, 1), valid_frac in [0, 1) and at
// least two interactions per user.
SplitDataset split(const RawInteractions& raw, double train_frac, double valid_frac,
                   std::uint64_t seed);

double density(const InteractionGraph& graph);
GraphStats stats(const RawInteractions& raw);
GraphStats stats(const InteractionGraph& graph);

// Held-out pairs grouped per user: result[u] is the sorted item list.
std::vector<std::vector<std::uint32_t>> group_by_user(std::span<const Interaction> pairs,
                                                      std::size_t num_users);

// Dataset directory layout: train.txt, valid.txt, test.txt in adjacency-list
// form over dense indices, plus id_map.txt with "user|item <index> <external>".
void write_dataset(const SplitDataset& dataset, const std::filesystem::path& dir);
SplitDataset read_dataset(const std::filesystem::path& dir);

}  // namespace gacse
