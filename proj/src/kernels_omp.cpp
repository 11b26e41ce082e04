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
#include "gacse/kernels.hpp"
#include "kernel_rows.hpp"

#include <omp.h>

namespace gacse::kernels::omp {

namespace {
const std::vector<std::uint32_t> kNoExclusions;
}  // namespace

void warmup_forward(const Matrix& embedding, const Matrix& w0, const PropagationPlan& plan,
                    Real slope, WarmupCache& cache) {
  rows::resize_warmup(cache, plan, embedding.cols(), w0.rows());
  const auto n = static_cast<std::int64_t>(plan.num_warm());
  #pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < n; ++s) rows::warm_row(embedding, w0, plan, slope, cache, s);
}

void attention_forward(const Matrix& e1, const Tables& params, const PropagationPlan& plan,
                       Real slope, AttentionCache& cache) {
  rows::resize_attention(cache, plan, e1.cols(), params.p.rows(), params.w1.rows());
  const auto targets = static_cast<std::int64_t>(plan.num_targets());
  const auto warm = static_cast<std::int64_t>(plan.num_warm());
  #pragma omp parallel
  {
    #pragma omp for schedule(static)
    for (std::int64_t t = 0; t < targets; ++t) rows::project_left(e1, params.p, plan, cache, t);
    #pragma omp for schedule(static)
    for (std::int64_t s = 0; s < warm; ++s) rows::project_right(e1, params.p, cache, s);
    #pragma omp for schedule(static)
    for (std::int64_t t = 0; t < targets; ++t) rows::attend_row(e1, params, plan, slope, cache, t);
  }
}

void attention_backward(const Matrix& e1, const Tables& params, const PropagationPlan& plan,
                        Real slope, const AttentionCache& cache, const Matrix& grad_e2,
                        Matrix& grad_e1, Tables& grads) {
  const Eigen::Index d1 = e1.cols();
  rows::AttentionScratch scratch(plan, d1, params.p.rows(), params.w1.rows());
  grad_e1.resize(static_cast<Eigen::Index>(plan.num_warm()), d1);
  const auto targets = static_cast<std::int64_t>(plan.num_targets());
  const auto warm = static_cast<std::int64_t>(plan.num_warm());
  auto grad_p_left = grads.p.leftCols(d1);
  auto grad_p_right = grads.p.rightCols(d1);
  #pragma omp parallel
  {
    #pragma omp for schedule(static)
    for (std::int64_t t = 0; t < targets; ++t) {
      rows::attend_backward_row(e1, params, plan, slope, cache, grad_e2, scratch, t);
    }
    #pragma omp for schedule(static)
    for (std::int64_t r = 0; r < warm; ++r) {
      rows::attend_gather_row(params, plan, cache, scratch, grad_e1, r);
    }
    #pragma omp for schedule(static)
    for (Eigen::Index a = 0; a < grads.w1.rows(); ++a) {
      rows::outer_row(grads.w1, scratch.grad_pre_sum, scratch.sum_input, a);
      rows::outer_row(grads.w2, scratch.grad_pre_prod, scratch.prod_input, a);
    }
    #pragma omp for schedule(static)
    for (Eigen::Index a = 0; a < grads.p.rows(); ++a) {
      rows::outer_row(grad_p_left, scratch.grad_left, scratch.target_e1, a);
      rows::outer_row(grad_p_right, scratch.grad_right, e1, a);
      grads.v(a, 0) += scratch.grad_v.col(a).sum();
    }
  }
}

void warmup_backward(const Matrix& w0, const PropagationPlan& plan, Real slope,
                     const WarmupCache& cache, const Matrix& grad_e1, Tables& grads,
                     std::vector<std::uint8_t>& touched) {
  Matrix grad_pre(cache.pre.rows(), cache.pre.cols());
  Matrix grad_input(cache.input.rows(), cache.input.cols());
  const auto warm = static_cast<std::int64_t>(plan.num_warm());
  const auto sources = static_cast<std::int64_t>(plan.source_rows.size());
  #pragma omp parallel
  {
    #pragma omp for schedule(static)
    for (std::int64_t s = 0; s < warm; ++s) {
      rows::warm_backward_row(w0, slope, cache, grad_e1, grad_pre, grad_input, s);
    }
    #pragma omp for schedule(static)
    for (Eigen::Index a = 0; a < grads.w0.rows(); ++a) {
      rows::outer_row(grads.w0, grad_pre, cache.input, a);
    }
    #pragma omp for schedule(static)
    for (std::int64_t idx = 0; idx < sources; ++idx) {
      rows::source_gather_row(plan, grad_input, grads.embedding, idx);
      touched[plan.source_rows[idx]] = 1;
    }
  }
}

void top_k(const Matrix& final_embeddings, std::size_t num_users,
           std::span<const std::uint32_t> users, ExcludeLists exclude, std::size_t k,
           std::vector<std::vector<std::uint32_t>>& out) {
  out.resize(users.size());
  const auto n = static_cast<std::int64_t>(users.size());
  #pragma omp parallel
  {
    Vector scores;
    std::vector<std::uint32_t> candidates;
    #pragma omp for schedule(static)
    for (std::int64_t x = 0; x < n; ++x) {
      const std::uint32_t user = users[x];
      const auto& excluded = exclude.empty() ? kNoExclusions : exclude[user];
      rows::user_top_k(final_embeddings, num_users, user, excluded, k, scores, candidates, out[x]);
    }
  }
}

}  // namespace gacse::kernels::omp
