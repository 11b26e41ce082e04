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

#include "gacse/graph.hpp"
#include "gacse/model.hpp"
#include "gacse/sampling.hpp"

namespace gacse {

enum class L2Scope {
  kAll,    // every entry of every table, each step
  kBatch,  // embedding rows the batch touched, plus all propagation weights
};

struct LossConfig {
  Real lambda1 = 1e-4;
  Real lambda2 = 1e-5;
  bool no_similarity = false;
  bool no_adaptive_margin = false;
  // Treat max(0, y_ij) as a constant in the backward pass.
  bool detach_margin = true;
  // Pairwise term -softplus(delta) instead of softplus(-delta). It is
  // unbounded below and exists only for comparison runs.
  bool printed_bpr_sign = false;
  L2Scope l2_scope = L2Scope::kAll;
};

struct LossBreakdown {
  Real bpr = 0;
  Real similarity = 0;
  Real l2 = 0;
  Real total = 0;
  Real lambda1 = 0;
  Real lambda2 = 0;
};

LossBreakdown combine(Real bpr, Real similarity, Real l2, Real lambda1, Real lambda2);

inline Real sigmoid(Real x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}
inline Real softplus(Real x) { return std::max(x, Real{0}) + std::log1p(std::exp(-std::abs(x))); }

// One triple's pairwise term and its partial derivatives.
struct PairwiseTerm {
  Real loss = 0;
  Real d_pos = 0;     // d loss / d y_ui
  Real d_neg = 0;     // d loss / d y_uj
  Real d_margin = 0;  // d loss / d y_ij
};

// softplus(-(y_ui - y_uj - max(0, y_ij))). With use_margin false the margin
// is 0 (no adaptive margin).
PairwiseTerm bpr_adaptive_margin(Real y_ui, Real y_uj, Real y_ij, bool detach_margin,
                                 bool use_margin = true, bool printed_sign = false);

// Sum over anchors of -log s(<e0_a, c_pos>) - log s(-<e0_a, c_neg>), with
// context rows from E_UC for user anchors and E_IC for item anchors.
Real similarity_loss(const Model& model, std::span<const SimilarityPairSet> user_pairs,
                     std::span<const SimilarityPairSet> item_pairs);

// Adds scale * d similarity_loss into grads (touches E, E_UC, E_IC only).
void add_similarity_grad(const Model& model, std::span<const SimilarityPairSet> user_pairs,
                         std::span<const SimilarityPairSet> item_pairs, Real scale,
                         GradientSet& grads);

// Sum of squared entries over all tables.
Real l2_penalty(const Tables& params);

// Full objective for one mini-batch. When grads is given, accumulates the
// exact gradient of `total` (margin handling per config) into it.
LossBreakdown total_loss(const Model& model, const InteractionGraph& graph,
                         const MiniBatch& batch, const LossConfig& config,
                         GradientSet* grads = nullptr, Exec exec = Exec::kSerial);

}  // namespace gacse
