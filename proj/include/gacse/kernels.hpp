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
#include <limits>
#include <span>
#include <vector>

#include "gacse/model.hpp"
#include "gacse/types.hpp"

namespace gacse {

// Which rows the two propagation layers read and write for one pass.
//
// Warm-up: every warm slot s produces e1 for node warm_nodes[s] from its own
// base row and the weighted rows warm_neighbors[warm_offsets[s] ..].
// Attention: target k reads e1 of warm slot targets[k] and of the warm slots
// att_neighbors[att_offsets[k] ..].
//
// The reverse indices let backward passes gather by destination, so every
// gradient row has exactly one writer and both kernel variants agree bitwise.
struct PropagationPlan {
  std::vector<NodeId> warm_nodes;
  std::vector<std::size_t> warm_offsets{0};
  std::vector<NodeId> warm_neighbors;
  std::vector<Real> warm_weights;

  std::vector<std::uint32_t> targets;
  std::vector<std::size_t> att_offsets{0};
  std::vector<std::uint32_t> att_neighbors;

  // Filled by finalize().
  std::vector<NodeId> source_rows;  // distinct base rows read by the warm-up
  std::vector<std::size_t> source_offsets;
  std::vector<std::uint32_t> source_slot;
  std::vector<Real> source_weight;  // 1 for the self connection
  std::vector<std::size_t> into_offsets;  // per warm slot, attention edges ending there
  std::vector<std::size_t> into_edges;
  std::vector<std::uint32_t> edge_target;  // attention edge -> target position
  std::vector<std::int64_t> slot_target;   // warm slot -> target position or -1

  std::size_t num_warm() const { return warm_nodes.size(); }
  std::size_t num_targets() const { return targets.size(); }
  std::size_t num_att_edges() const { return att_neighbors.size(); }

  void finalize();
};

struct WarmupCache {
  Matrix input;  // warm x d0, self row plus weighted neighbor rows
  Matrix pre;    // warm x d1, W0 * input
  Matrix out;    // warm x d1, e1
};

struct AttentionCache {
  Matrix left;     // targets x d2, P[:, :d1] * e1_target
  Matrix right;    // warm x d2, P[:, d1:] * e1_slot
  Vector weights;  // per attention edge, softmax weight
  Matrix summary;  // targets x d1, weighted neighbor sum
  Matrix pre_sum;  // targets x d3, W1 (e1 + summary)
  Matrix pre_prod; // targets x d3, W2 (e1 * summary)
  Matrix out;      // targets x d3, e2
};

using ExcludeLists = std::span<const std::vector<std::uint32_t>>;

#define GACSE_KERNEL_DECLS                                                                   \
  void warmup_forward(const Matrix& embedding, const Matrix& w0, const PropagationPlan& plan, \
                      Real slope, WarmupCache& cache);                                       \
  void attention_forward(const Matrix& e1, const Tables& params, const PropagationPlan& plan, \
                         Real slope, AttentionCache& cache);                                 \
  void attention_backward(const Matrix& e1, const Tables& params, const PropagationPlan& plan, \
                          Real slope, const AttentionCache& cache, const Matrix& grad_e2,    \
                          Matrix& grad_e1, Tables& grads);                                   \
  void warmup_backward(const Matrix& w0, const PropagationPlan& plan, Real slope,            \
                       const WarmupCache& cache, const Matrix& grad_e1, Tables& grads,       \
                       std::vector<std::uint8_t>& touched);                                  \
  void top_k(const Matrix& final_embeddings, std::size_t num_users,                          \
             std::span<const std::uint32_t> users, ExcludeLists exclude, std::size_t k,      \
             std::vector<std::vector<std::uint32_t>>& out);

namespace kernels {

// Straight loops; the reference every parallel variant is tested against.
namespace serial {
GACSE_KERNEL_DECLS
}  // namespace serial

// OpenMP over rows / users. Same per-row arithmetic as serial.
namespace omp {
GACSE_KERNEL_DECLS
}  // namespace omp

inline void warmup_forward(Exec exec, const Matrix& embedding, const Matrix& w0,
                           const PropagationPlan& plan, Real slope, WarmupCache& cache) {
  exec == Exec::kSerial ? serial::warmup_forward(embedding, w0, plan, slope, cache)
                        : omp::warmup_forward(embedding, w0, plan, slope, cache);
}
inline void attention_forward(Exec exec, const Matrix& e1, const Tables& params,
                              const PropagationPlan& plan, Real slope, AttentionCache& cache) {
  exec == Exec::kSerial ? serial::attention_forward(e1, params, plan, slope, cache)
                        : omp::attention_forward(e1, params, plan, slope, cache);
}
inline void attention_backward(Exec exec, const Matrix& e1, const Tables& params,
                               const PropagationPlan& plan, Real slope,
                               const AttentionCache& cache, const Matrix& grad_e2,
                               Matrix& grad_e1, Tables& grads) {
  exec == Exec::kSerial
      ? serial::attention_backward(e1, params, plan, slope, cache, grad_e2, grad_e1, grads)
      : omp::attention_backward(e1, params, plan, slope, cache, grad_e2, grad_e1, grads);
}
inline void warmup_backward(Exec exec, const Matrix& w0, const PropagationPlan& plan, Real slope,
                            const WarmupCache& cache, const Matrix& grad_e1, Tables& grads,
                            std::vector<std::uint8_t>& touched) {
  exec == Exec::kSerial
      ? serial::warmup_backward(w0, plan, slope, cache, grad_e1, grads, touched)
      : omp::warmup_backward(w0, plan, slope, cache, grad_e1, grads, touched);
}
inline void top_k(Exec exec, const Matrix& final_embeddings, std::size_t num_users,
                  std::span<const std::uint32_t> users, ExcludeLists exclude, std::size_t k,
                  std::vector<std::vector<std::uint32_t>>& out) {
  exec == Exec::kSerial ? serial::top_k(final_embeddings, num_users, users, exclude, k, out)
                        : omp::top_k(final_embeddings, num_users, users, exclude, k, out);
}

}  // namespace kernels

#undef GACSE_KERNEL_DECLS

}  // namespace gacse
