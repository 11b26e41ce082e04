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
#include "gacse/objective.hpp"

#include <cmath>

#include "gacse/error.hpp"
#include "gacse/propagation.hpp"

namespace gacse {

LossBreakdown combine(Real bpr, Real similarity, Real l2, Real lambda1, Real lambda2) {
  return {bpr, similarity, l2, bpr + lambda1 * similarity + lambda2 * l2, lambda1, lambda2};
}

PairwiseTerm bpr_adaptive_margin(Real y_ui, Real y_uj, Real y_ij, bool detach_margin,
                                 bool use_margin, bool printed_sign) {
  const bool margin_active = use_margin && y_ij > 0;
  const Real margin = margin_active ? y_ij : 0;
  const Real delta = y_ui - y_uj - margin;
  PairwiseTerm term;
  // d loss / d delta
  Real slope = 0;
  if (printed_sign) {
    term.loss = -softplus(delta);
    slope = -sigmoid(delta);
  } else {
    term.loss = softplus(-delta);
    slope = -sigmoid(-delta);
  }
  term.d_pos = slope;
  term.d_neg = -slope;
  term.d_margin = (margin_active && !detach_margin) ? -slope : 0;
  return term;
}

namespace {

// Context row for a same-side node: user ids index E_UC, item ids E_IC.
struct ContextRef {
  const Matrix* table;
  Eigen::Index row;
};

ContextRef context_of(const Model& model, NodeId node) {
  if (node < model.num_users) return {&model.params.user_context, node};
  return {&model.params.item_context, static_cast<Eigen::Index>(node - model.num_users)};
}

void check_pairs(const Model& model, std::span<const SimilarityPairSet> pairs, bool users) {
  for (const auto& set : pairs) {
    auto ok = [&](NodeId n) {
      return users ? n < model.num_users : (n >= model.num_users && n < model.num_nodes());
    };
    bool valid = ok(set.anchor);
    for (NodeId n : set.positives) valid = valid && ok(n);
    for (NodeId n : set.negatives) valid = valid && ok(n);
    if (!valid) throw Error(ErrorCategory::kShapeMismatch, "similarity pair index out of range");
  }
}

template <typename F>
void for_each_similarity_term(const Model& model, std::span<const SimilarityPairSet> user_pairs,
                              std::span<const SimilarityPairSet> item_pairs, F&& f) {
  check_pairs(model, user_pairs, true);
  check_pairs(model, item_pairs, false);
  for (auto pairs : {user_pairs, item_pairs}) {
    for (const SimilarityPairSet& set : pairs) {
      for (NodeId pos : set.positives) f(set.anchor, pos, true);
      for (NodeId neg : set.negatives) f(set.anchor, neg, false);
    }
  }
}

}  // namespace

Real similarity_loss(const Model& model, std::span<const SimilarityPairSet> user_pairs,
                     std::span<const SimilarityPairSet> item_pairs) {
  Real total = 0;
  for_each_similarity_term(model, user_pairs, item_pairs, [&](NodeId anchor, NodeId other, bool positive) {
    const ContextRef ctx = context_of(model, other);
    const Real x = model.params.embedding.row(anchor).dot(ctx.table->row(ctx.row));
    total += positive ? softplus(-x) : softplus(x);
  });
  return total;
}

void add_similarity_grad(const Model& model, std::span<const SimilarityPairSet> user_pairs,
                         std::span<const SimilarityPairSet> item_pairs, Real scale,
                         GradientSet& grads) {
  for_each_similarity_term(model, user_pairs, item_pairs, [&](NodeId anchor, NodeId other, bool positive) {
    const ContextRef ctx = context_of(model, other);
    const auto e0 = model.params.embedding.row(anchor);
    const auto c = ctx.table->row(ctx.row);
    const Real x = e0.dot(c);
    const Real d = scale * (positive ? -sigmoid(-x) : sigmoid(x));
    grads.grads.embedding.row(anchor) += d * c;
    grads.touched_embedding[anchor] = 1;
    if (other < model.num_users) {
      grads.grads.user_context.row(ctx.row) += d * e0;
      grads.touched_user_context[ctx.row] = 1;
    } else {
      grads.grads.item_context.row(ctx.row) += d * e0;
      grads.touched_item_context[ctx.row] = 1;
    }
  });
}

Real l2_penalty(const Tables& params) {
  Real total = 0;
  params.for_each([&](const char*, const Matrix& m) { total += m.squaredNorm(); });
  return total;
}

namespace {

Real masked_rows_norm(const Matrix& m, const std::vector<std::uint8_t>& mask) {
  Real total = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (mask[r]) total += m.row(r).squaredNorm();
  }
  return total;
}

void add_masked_rows(Matrix& g, const Matrix& m, const std::vector<std::uint8_t>& mask, Real c) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (mask[r]) g.row(r) += c * m.row(r);
  }
}

}  // namespace

LossBreakdown total_loss(const Model& model, const InteractionGraph& graph,
                         const MiniBatch& batch, const LossConfig& config, GradientSet* grads,
                         Exec exec) {
  if (config.lambda1 < 0 || config.lambda2 < 0) {
    throw Error(ErrorCategory::kConfig, "lambda1 and lambda2 must be >= 0");
  }
  if (graph.num_users() != model.num_users || graph.num_items() != model.num_items) {
    throw Error(ErrorCategory::kShapeMismatch, "graph and model disagree on node counts");
  }
  if (batch.triples.empty()) throw Error(ErrorCategory::kInvariant, "empty mini-batch");

  const ForwardTrace trace = forward(model, plan_for_batch(graph, batch), exec);
  const Matrix& e0 = model.params.embedding;
  const Matrix& e2 = trace.attention.out;
  const Real inv_batch = 1.0 / static_cast<Real>(batch.triples.size());

  Matrix grad_e2;
  if (grads) grad_e2 = Matrix::Zero(e2.rows(), e2.cols());

  Real bpr = 0;
  for (const TrainTriple& t : batch.triples) {
    const NodeId u = graph.user_node(t.user);
    const NodeId i = graph.item_node(t.pos_item);
    const NodeId j = graph.item_node(t.neg_item);
    const auto tu = trace.target(u);
    const auto ti = trace.target(i);
    const auto tj = trace.target(j);
    const Real y_ui = e0.row(u).dot(e0.row(i)) + e2.row(tu).dot(e2.row(ti));
    const Real y_uj = e0.row(u).dot(e0.row(j)) + e2.row(tu).dot(e2.row(tj));
    const Real y_ij = e0.row(i).dot(e0.row(j)) + e2.row(ti).dot(e2.row(tj));
    const PairwiseTerm term = bpr_adaptive_margin(y_ui, y_uj, y_ij, config.detach_margin,
                                                  !config.no_adaptive_margin,
                                                  config.printed_bpr_sign);
    bpr += term.loss * inv_batch;
    if (!grads) continue;

    const Real gp = term.d_pos * inv_batch;
    const Real gn = term.d_neg * inv_batch;
    const Real gm = term.d_margin * inv_batch;
    Matrix& ge0 = grads->grads.embedding;
    ge0.row(u) += gp * e0.row(i) + gn * e0.row(j);
    ge0.row(i) += gp * e0.row(u) + gm * e0.row(j);
    ge0.row(j) += gn * e0.row(u) + gm * e0.row(i);
    grads->touched_embedding[u] = grads->touched_embedding[i] = grads->touched_embedding[j] = 1;
    grad_e2.row(tu) += gp * e2.row(ti) + gn * e2.row(tj);
    grad_e2.row(ti) += gp * e2.row(tu) + gm * e2.row(tj);
    grad_e2.row(tj) += gn * e2.row(tu) + gm * e2.row(ti);
  }
  if (grads) backward(model, trace, grad_e2, *grads, exec);

  Real similarity = 0;
  if (!config.no_similarity) {
    similarity = similarity_loss(model, batch.user_sim, batch.item_sim);
    if (grads && config.lambda1 != 0) {
      add_similarity_grad(model, batch.user_sim, batch.item_sim, config.lambda1, *grads);
    }
  }

  Real l2 = 0;
  const Tables& p = model.params;
  if (config.l2_scope == L2Scope::kAll) {
    l2 = l2_penalty(p);
    if (grads && config.lambda2 != 0) {
      Tables& g = grads->grads;
      const Real c = 2 * config.lambda2;
      g.embedding += c * p.embedding;
      g.user_context += c * p.user_context;
      g.item_context += c * p.item_context;
      g.w0 += c * p.w0;
      g.w1 += c * p.w1;
      g.w2 += c * p.w2;
      g.p += c * p.p;
      g.v += c * p.v;
      grads->touch_all();
    }
  } else {
    // Mask is the structural footprint of this batch, not the gradient values.
    struct {
      std::vector<std::uint8_t> touched_embedding, touched_user_context, touched_item_context;
    } footprint{std::vector<std::uint8_t>(model.num_nodes(), 0),
                std::vector<std::uint8_t>(model.num_users, 0),
                std::vector<std::uint8_t>(model.num_items, 0)};
    {
      // Warm-up rows, direct e0 rows and similarity rows.
      const auto& plan = trace.plan;
      for (NodeId r : plan.source_rows) footprint.touched_embedding[r] = 1;
      for (const TrainTriple& t : batch.triples) {
        footprint.touched_embedding[graph.user_node(t.user)] = 1;
        footprint.touched_embedding[graph.item_node(t.pos_item)] = 1;
        footprint.touched_embedding[graph.item_node(t.neg_item)] = 1;
      }
      if (!config.no_similarity) {
        for (auto pairs : {std::span<const SimilarityPairSet>(batch.user_sim),
                           std::span<const SimilarityPairSet>(batch.item_sim)}) {
          for (const auto& set : pairs) {
            footprint.touched_embedding[set.anchor] = 1;
            for (auto list : {&set.positives, &set.negatives}) {
              for (NodeId n : *list) {
                if (n < model.num_users) footprint.touched_user_context[n] = 1;
                else footprint.touched_item_context[n - model.num_users] = 1;
              }
            }
          }
        }
      }
    }
    l2 = masked_rows_norm(p.embedding, footprint.touched_embedding) +
         masked_rows_norm(p.user_context, footprint.touched_user_context) +
         masked_rows_norm(p.item_context, footprint.touched_item_context) + p.w0.squaredNorm() +
         p.w1.squaredNorm() + p.w2.squaredNorm() + p.p.squaredNorm() + p.v.squaredNorm();
    if (grads && config.lambda2 != 0) {
      Tables& g = grads->grads;
      const Real c = 2 * config.lambda2;
      add_masked_rows(g.embedding, p.embedding, footprint.touched_embedding, c);
      add_masked_rows(g.user_context, p.user_context, footprint.touched_user_context, c);
      add_masked_rows(g.item_context, p.item_context, footprint.touched_item_context, c);
      g.w0 += c * p.w0;
      g.w1 += c * p.w1;
      g.w2 += c * p.w2;
      g.p += c * p.p;
      g.v += c * p.v;
      for (std::size_t r = 0; r < footprint.touched_embedding.size(); ++r) {
        grads->touched_embedding[r] |= footprint.touched_embedding[r];
      }
      for (std::size_t r = 0; r < footprint.touched_user_context.size(); ++r) {
        grads->touched_user_context[r] |= footprint.touched_user_context[r];
      }
      for (std::size_t r = 0; r < footprint.touched_item_context.size(); ++r) {
        grads->touched_item_context[r] |= footprint.touched_item_context[r];
      }
    }
  }

  return combine(bpr, similarity, l2, config.lambda1, config.lambda2);
}

}  // namespace gacse
