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
// Per-row arithmetic shared by the serial and OpenMP kernel drivers. Each
// function writes only the rows it is handed, so drivers may call them from
// any thread.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "gacse/kernels.hpp"

namespace gacse::kernels::rows {

struct AttentionScratch {
  Matrix grad_pre_sum;   // targets x d3
  Matrix grad_pre_prod;  // targets x d3
  Matrix sum_input;      // targets x d1, e1 + summary
  Matrix prod_input;     // targets x d1, e1 * summary
  Matrix target_e1;      // targets x d1
  Matrix grad_self;      // targets x d1
  Matrix grad_summary;   // targets x d1
  Matrix grad_left;      // targets x d2
  Matrix grad_v;         // targets x d2
  Matrix grad_right;     // warm x d2
  Vector grad_score;     // per attention edge

  AttentionScratch(const PropagationPlan& plan, std::size_t d1, std::size_t d2, std::size_t d3)
      : grad_pre_sum(plan.num_targets(), d3),
        grad_pre_prod(plan.num_targets(), d3),
        sum_input(plan.num_targets(), d1),
        prod_input(plan.num_targets(), d1),
        target_e1(plan.num_targets(), d1),
        grad_self(plan.num_targets(), d1),
        grad_summary(plan.num_targets(), d1),
        grad_left(plan.num_targets(), d2),
        grad_v(plan.num_targets(), d2),
        grad_right(plan.num_warm(), d2),
        grad_score(plan.num_att_edges()) {}
};

inline void resize_warmup(WarmupCache& c, const PropagationPlan& plan, Eigen::Index d0,
                          Eigen::Index d1) {
  const auto n = static_cast<Eigen::Index>(plan.num_warm());
  c.input.resize(n, d0);
  c.pre.resize(n, d1);
  c.out.resize(n, d1);
}

inline void resize_attention(AttentionCache& c, const PropagationPlan& plan, Eigen::Index d1,
                             Eigen::Index d2, Eigen::Index d3) {
  const auto t = static_cast<Eigen::Index>(plan.num_targets());
  c.left.resize(t, d2);
  c.right.resize(static_cast<Eigen::Index>(plan.num_warm()), d2);
  c.weights.resize(static_cast<Eigen::Index>(plan.num_att_edges()));
  c.summary.resize(t, d1);
  c.pre_sum.resize(t, d3);
  c.pre_prod.resize(t, d3);
  c.out.resize(t, d3);
}

inline void warm_row(const Matrix& embedding, const Matrix& w0, const PropagationPlan& plan,
                     Real slope, WarmupCache& c, std::size_t s) {
  auto in = c.input.row(s);
  in = embedding.row(plan.warm_nodes[s]);
  for (std::size_t e = plan.warm_offsets[s]; e < plan.warm_offsets[s + 1]; ++e) {
    in += plan.warm_weights[e] * embedding.row(plan.warm_neighbors[e]);
  }
  c.pre.row(s).noalias() = in * w0.transpose();
  for (Eigen::Index j = 0; j < c.pre.cols(); ++j) c.out(s, j) = leaky_relu(c.pre(s, j), slope);
}

inline void project_left(const Matrix& e1, const Matrix& p, const PropagationPlan& plan,
                         AttentionCache& c, std::size_t t) {
  c.left.row(t).noalias() = e1.row(plan.targets[t]) * p.leftCols(e1.cols()).transpose();
}

inline void project_right(const Matrix& e1, const Matrix& p, AttentionCache& c, std::size_t s) {
  c.right.row(s).noalias() = e1.row(s) * p.rightCols(e1.cols()).transpose();
}

inline Real edge_score(const AttentionCache& c, const Matrix& v, std::size_t t, std::size_t slot) {
  Real score = 0;
  for (Eigen::Index j = 0; j < v.rows(); ++j) score += v(j, 0) * std::tanh(c.left(t, j) + c.right(slot, j));
  return score;
}

inline void attend_row(const Matrix& e1, const Tables& params, const PropagationPlan& plan,
                       Real slope, AttentionCache& c, std::size_t t) {
  const std::size_t begin = plan.att_offsets[t];
  const std::size_t end = plan.att_offsets[t + 1];
  Real max_score = -std::numeric_limits<Real>::infinity();
  for (std::size_t e = begin; e < end; ++e) {
    c.weights[e] = edge_score(c, params.v, t, plan.att_neighbors[e]);
    max_score = std::max(max_score, c.weights[e]);
  }
  Real total = 0;
  for (std::size_t e = begin; e < end; ++e) {
    c.weights[e] = std::exp(c.weights[e] - max_score);
    total += c.weights[e];
  }
  auto summary = c.summary.row(t);
  summary.setZero();
  for (std::size_t e = begin; e < end; ++e) {
    c.weights[e] /= total;
    summary += c.weights[e] * e1.row(plan.att_neighbors[e]);
  }
  const auto self = e1.row(plan.targets[t]);
  c.pre_sum.row(t).noalias() = (self + summary) * params.w1.transpose();
  c.pre_prod.row(t).noalias() = self.cwiseProduct(summary) * params.w2.transpose();
  for (Eigen::Index j = 0; j < c.out.cols(); ++j) {
    c.out(t, j) = leaky_relu(c.pre_sum(t, j), slope) + leaky_relu(c.pre_prod(t, j), slope);
  }
}

inline void attend_backward_row(const Matrix& e1, const Tables& params, const PropagationPlan& plan,
                                Real slope, const AttentionCache& c, const Matrix& grad_e2,
                                AttentionScratch& g, std::size_t t) {
  for (Eigen::Index j = 0; j < grad_e2.cols(); ++j) {
    g.grad_pre_sum(t, j) = grad_e2(t, j) * leaky_relu_grad(c.pre_sum(t, j), slope);
    g.grad_pre_prod(t, j) = grad_e2(t, j) * leaky_relu_grad(c.pre_prod(t, j), slope);
  }
  const auto self = e1.row(plan.targets[t]);
  const auto summary = c.summary.row(t);
  g.target_e1.row(t) = self;
  g.sum_input.row(t) = self + summary;
  g.prod_input.row(t) = self.cwiseProduct(summary);

  const Eigen::RowVectorXd via_sum = g.grad_pre_sum.row(t) * params.w1;
  const Eigen::RowVectorXd via_prod = g.grad_pre_prod.row(t) * params.w2;
  g.grad_self.row(t) = via_sum + via_prod.cwiseProduct(summary);
  g.grad_summary.row(t) = via_sum + via_prod.cwiseProduct(self);

  // Softmax backward: d score_e = w_e (d w_e - sum_k w_k d w_k).
  const std::size_t begin = plan.att_offsets[t];
  const std::size_t end = plan.att_offsets[t + 1];
  Real mean = 0;
  for (std::size_t e = begin; e < end; ++e) {
    g.grad_score[e] = g.grad_summary.row(t).dot(e1.row(plan.att_neighbors[e]));
    mean += c.weights[e] * g.grad_score[e];
  }
  g.grad_left.row(t).setZero();
  g.grad_v.row(t).setZero();
  for (std::size_t e = begin; e < end; ++e) {
    g.grad_score[e] = c.weights[e] * (g.grad_score[e] - mean);
    const std::size_t slot = plan.att_neighbors[e];
    for (Eigen::Index j = 0; j < params.v.rows(); ++j) {
      const Real h = std::tanh(c.left(t, j) + c.right(slot, j));
      g.grad_v(t, j) += g.grad_score[e] * h;
      g.grad_left(t, j) += g.grad_score[e] * params.v(j, 0) * (1 - h * h);
    }
  }
}

// Collects every gradient flowing into e1 of warm slot r.
inline void attend_gather_row(const Tables& params, const PropagationPlan& plan,
                              const AttentionCache& c, AttentionScratch& g, Matrix& grad_e1,
                              std::size_t r) {
  const Eigen::Index d1 = grad_e1.cols();
  Eigen::RowVectorXd from_neighbors = Eigen::RowVectorXd::Zero(d1);
  auto right = g.grad_right.row(r);
  right.setZero();
  for (std::size_t k = plan.into_offsets[r]; k < plan.into_offsets[r + 1]; ++k) {
    const std::size_t e = plan.into_edges[k];
    const std::size_t t = plan.edge_target[e];
    from_neighbors += c.weights[e] * g.grad_summary.row(t);
    for (Eigen::Index j = 0; j < params.v.rows(); ++j) {
      const Real h = std::tanh(c.left(t, j) + c.right(r, j));
      right(j) += g.grad_score[e] * params.v(j, 0) * (1 - h * h);
    }
  }
  auto out = grad_e1.row(r);
  out.noalias() = from_neighbors + right * params.p.rightCols(d1);
  if (const auto t = plan.slot_target[r]; t >= 0) {
    out += g.grad_self.row(t);
    out.noalias() += g.grad_left.row(t) * params.p.leftCols(d1);
  }
}

// out.row(a) += G.col(a)^T X, i.e. one row of G^T X.
template <typename Out>
inline void outer_row(Out& out, const Matrix& g, const Matrix& x, Eigen::Index a) {
  out.row(a).noalias() += g.col(a).transpose() * x;
}

inline void warm_backward_row(const Matrix& w0, Real slope, const WarmupCache& c,
                              const Matrix& grad_e1, Matrix& grad_pre, Matrix& grad_input,
                              std::size_t s) {
  for (Eigen::Index j = 0; j < grad_pre.cols(); ++j) {
    grad_pre(s, j) = grad_e1(s, j) * leaky_relu_grad(c.pre(s, j), slope);
  }
  grad_input.row(s).noalias() = grad_pre.row(s) * w0;
}

inline void source_gather_row(const PropagationPlan& plan, const Matrix& grad_input,
                              Matrix& grad_embedding, std::size_t idx) {
  auto out = grad_embedding.row(plan.source_rows[idx]);
  for (std::size_t k = plan.source_offsets[idx]; k < plan.source_offsets[idx + 1]; ++k) {
    out += plan.source_weight[k] * grad_input.row(plan.source_slot[k]);
  }
}

// Top-k by descending score, ties broken by ascending item index.
inline void user_top_k(const Matrix& final_embeddings, std::size_t num_users, std::uint32_t user,
                       const std::vector<std::uint32_t>& excluded, std::size_t k,
                       Vector& scores, std::vector<std::uint32_t>& candidates,
                       std::vector<std::uint32_t>& out) {
  const auto m = static_cast<Eigen::Index>(final_embeddings.rows() - num_users);
  const auto items = final_embeddings.bottomRows(m);
  scores.noalias() = items * final_embeddings.row(user).transpose();
  candidates.clear();
  auto skip = excluded.begin();
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(m); ++i) {
    while (skip != excluded.end() && *skip < i) ++skip;
    if (skip != excluded.end() && *skip == i) continue;
    candidates.push_back(i);
  }
  const auto better = [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(), better);
  out.assign(candidates.begin(), candidates.begin() + take);
}

}  // namespace gacse::kernels::rows
