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
#include "gacse/propagation.hpp"

#include "gacse/error.hpp"

namespace gacse {

namespace {

void check_graph(const Model& model, const InteractionGraph& graph) {
  if (graph.num_users() != model.num_users || graph.num_items() != model.num_items) {
    throw Error(ErrorCategory::kShapeMismatch,
                "model is " + std::to_string(model.num_users) + " users x " +
                    std::to_string(model.num_items) + " items but graph is " +
                    std::to_string(graph.num_users()) + " x " + std::to_string(graph.num_items()));
  }
}

}  // namespace

std::uint32_t ForwardTrace::target(NodeId node) const {
  const auto it = target_of.find(node);
  if (it == target_of.end()) {
    throw Error(ErrorCategory::kInvariant, "node " + std::to_string(node) + " was not propagated");
  }
  return it->second;
}

PropagationPlan plan_for_batch(const InteractionGraph& graph, const MiniBatch& batch) {
  PropagationPlan plan;
  std::unordered_map<NodeId, std::uint32_t> slot_of;
  auto slot = [&](NodeId node) {
    auto [it, inserted] = slot_of.try_emplace(node, static_cast<std::uint32_t>(plan.warm_nodes.size()));
    if (inserted) plan.warm_nodes.push_back(node);
    return it->second;
  };
  for (const NeighborSample& s : batch.neighbor_samples) slot(s.node);
  for (const NeighborSample& s : batch.neighbor_samples) {
    plan.targets.push_back(slot_of.at(s.node));
    for (NodeId nb : s.neighbors) plan.att_neighbors.push_back(slot(nb));
    plan.att_offsets.push_back(plan.att_neighbors.size());
  }

  std::unordered_map<NodeId, const NeighborSample*> capped;
  for (const NeighborSample& s : batch.warmup_samples) capped.emplace(s.node, &s);
  for (NodeId node : plan.warm_nodes) {
    const std::size_t deg = graph.degree(node);
    if (const auto it = capped.find(node); it != capped.end()) {
      // Sampled neighbors are rescaled so the sum stays unbiased.
      const auto& picks = it->second->neighbors;
      const Real scale = static_cast<Real>(deg) / static_cast<Real>(picks.size());
      for (NodeId nb : picks) {
        plan.warm_neighbors.push_back(nb);
        plan.warm_weights.push_back(scale * warmup_weight(deg, graph.degree(nb)));
      }
    } else {
      for (NodeId nb : graph.neighbors(node)) {
        plan.warm_neighbors.push_back(nb);
        plan.warm_weights.push_back(warmup_weight(deg, graph.degree(nb)));
      }
    }
    plan.warm_offsets.push_back(plan.warm_neighbors.size());
  }
  plan.finalize();
  return plan;
}

PropagationPlan plan_full_graph(const InteractionGraph& graph) {
  PropagationPlan plan;
  const std::size_t n = graph.num_nodes();
  plan.warm_nodes.resize(n);
  plan.targets.resize(n);
  plan.warm_neighbors.reserve(graph.adjacency().size());
  plan.warm_weights.reserve(graph.adjacency().size());
  plan.att_neighbors.reserve(graph.adjacency().size());
  for (NodeId node = 0; node < n; ++node) {
    plan.warm_nodes[node] = node;
    plan.targets[node] = node;
    const std::size_t deg = graph.degree(node);
    for (NodeId nb : graph.neighbors(node)) {
      plan.warm_neighbors.push_back(nb);
      plan.warm_weights.push_back(warmup_weight(deg, graph.degree(nb)));
      plan.att_neighbors.push_back(nb);
    }
    plan.warm_offsets.push_back(plan.warm_neighbors.size());
    plan.att_offsets.push_back(plan.att_neighbors.size());
  }
  plan.finalize();
  return plan;
}

ForwardTrace forward(const Model& model, PropagationPlan plan, Exec exec) {
  ForwardTrace trace;
  trace.plan = std::move(plan);
  for (std::uint32_t t = 0; t < trace.plan.num_targets(); ++t) {
    trace.target_of.emplace(trace.plan.warm_nodes[trace.plan.targets[t]], t);
  }
  kernels::warmup_forward(exec, model.params.embedding, model.params.w0, trace.plan,
                          model.leaky_slope, trace.warmup);
  kernels::attention_forward(exec, trace.warmup.out, model.params, trace.plan, model.leaky_slope,
                             trace.attention);
  return trace;
}

void backward(const Model& model, const ForwardTrace& trace, const Matrix& grad_e2,
              GradientSet& out, Exec exec) {
  if (grad_e2.rows() != static_cast<Eigen::Index>(trace.plan.num_targets()) ||
      grad_e2.cols() != static_cast<Eigen::Index>(model.dims.d3) ||
      !out.grads.same_shape(model.params)) {
    throw Error(ErrorCategory::kShapeMismatch, "backward: gradient shapes do not match the model");
  }
  Matrix grad_e1;
  kernels::attention_backward(exec, trace.warmup.out, model.params, trace.plan, model.leaky_slope,
                              trace.attention, grad_e2, grad_e1, out.grads);
  kernels::warmup_backward(exec, model.params.w0, trace.plan, model.leaky_slope, trace.warmup,
                           grad_e1, out.grads, out.touched_embedding);
}

Matrix final_embeddings(const Model& model, const InteractionGraph& graph, Exec exec) {
  check_graph(model, graph);
  PropagationPlan plan = plan_full_graph(graph);
  WarmupCache warmup;
  AttentionCache attention;
  kernels::warmup_forward(exec, model.params.embedding, model.params.w0, plan, model.leaky_slope,
                          warmup);
  kernels::attention_forward(exec, warmup.out, model.params, plan, model.leaky_slope, attention);
  Matrix out(static_cast<Eigen::Index>(model.num_nodes()),
             static_cast<Eigen::Index>(model.final_dim()));
  out.leftCols(model.dims.d0) = model.params.embedding;
  out.rightCols(model.dims.d3) = attention.out;
  return out;
}

}  // namespace gacse
