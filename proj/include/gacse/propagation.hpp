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

#include <span>
#include <unordered_map>

#include "gacse/graph.hpp"
#include "gacse/kernels.hpp"
#include "gacse/model.hpp"
#include "gacse/sampling.hpp"

namespace gacse {

// Warm-up over full neighborhoods (or the batch's capped samples) and
// attention over the batch's sampled neighbor sets. Targets follow the order
// of batch.neighbor_samples.
PropagationPlan plan_for_batch(const InteractionGraph& graph, const MiniBatch& batch);

// Every node is a target and attends over its full neighborhood. Warm slot and
// target position both equal the global node id.
PropagationPlan plan_full_graph(const InteractionGraph& graph);

struct ForwardTrace {
  PropagationPlan plan;
  WarmupCache warmup;
  AttentionCache attention;
  std::unordered_map<NodeId, std::uint32_t> target_of;  // node -> target position

  std::uint32_t target(NodeId node) const;
  std::span<const Real> e2(NodeId node) const { return row_span(attention.out, target(node)); }
  // Attention weights of target position t over its neighbor list.
  std::span<const Real> attention_weights(std::uint32_t t) const {
    return {attention.weights.data() + plan.att_offsets[t],
            plan.att_offsets[t + 1] - plan.att_offsets[t]};
  }
};

ForwardTrace forward(const Model& model, PropagationPlan plan, Exec exec = Exec::kSerial);

// Accumulates into `out` the parameter gradients given dL/d e2 for each target
// (rows ordered like trace.plan.targets). Marks touched base-embedding rows.
void backward(const Model& model, const ForwardTrace& trace, const Matrix& grad_e2,
              GradientSet& out, Exec exec = Exec::kSerial);

// Rows e* = e0 || e2 for every node, computed with full neighborhoods.
Matrix final_embeddings(const Model& model, const InteractionGraph& graph,
                        Exec exec = Exec::kSerial);

}  // namespace gacse
