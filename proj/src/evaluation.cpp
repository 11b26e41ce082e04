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
#include "gacse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gacse/error.hpp"
#include "gacse/kernels.hpp"
#include "gacse/propagation.hpp"

namespace gacse {

std::vector<std::uint32_t> rank_items(std::span<const Real> scores,
                                      std::span<const std::uint32_t> exclude) {
  std::vector<std::uint32_t> order;
  order.reserve(scores.size());
  for (std::uint32_t i = 0; i < scores.size(); ++i) {
    if (!std::binary_search(exclude.begin(), exclude.end(), i)) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  return order;
}

std::optional<double> recall_at_k(std::span<const std::uint32_t> ranked,
                                  std::span<const std::uint32_t> held_out, std::size_t k) {
  if (k == 0) throw Error(ErrorCategory::kConfig, "k must be >= 1");
  if (held_out.empty()) return std::nullopt;
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t p = 0; p < depth; ++p) {
    if (std::binary_search(held_out.begin(), held_out.end(), ranked[p])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(held_out.size());
}

std::optional<double> ndcg_at_k(std::span<const std::uint32_t> ranked,
                                std::span<const std::uint32_t> held_out, std::size_t k) {
  if (k == 0) throw Error(ErrorCategory::kConfig, "k must be >= 1");
  if (held_out.empty()) return std::nullopt;
  const std::size_t depth = std::min(k, ranked.size());
  double dcg = 0;
  for (std::size_t p = 0; p < depth; ++p) {
    if (std::binary_search(held_out.begin(), held_out.end(), ranked[p])) {
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
  }
  double ideal = 0;
  for (std::size_t p = 0; p < std::min(k, held_out.size()); ++p) {
    ideal += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  }
  return dcg / ideal;
}

MetricsReport evaluate_rankings(const Matrix& final_embeddings, std::size_t num_users,
                                const std::vector<std::vector<std::uint32_t>>& held_out,
                                const std::vector<std::vector<std::uint32_t>>& exclude,
                                std::size_t k, Exec exec) {
  if (k == 0) throw Error(ErrorCategory::kConfig, "k must be >= 1");
  if (held_out.size() != num_users || (!exclude.empty() && exclude.size() != num_users)) {
    throw Error(ErrorCategory::kShapeMismatch, "per-user lists do not match the user count");
  }
  std::vector<std::uint32_t> users;
  for (std::uint32_t u = 0; u < num_users; ++u) {
    if (!held_out[u].empty()) users.push_back(u);
  }
  std::vector<std::vector<std::uint32_t>> top;
  kernels::top_k(exec, final_embeddings, num_users, users, exclude, k, top);

  MetricsReport report;
  report.k = k;
  report.num_users_evaluated = users.size();
  if (users.empty()) return report;
  double recall = 0;
  double ndcg = 0;
  for (std::size_t x = 0; x < users.size(); ++x) {
    recall += *recall_at_k(top[x], held_out[users[x]], k);
    ndcg += *ndcg_at_k(top[x], held_out[users[x]], k);
  }
  report.recall = recall / static_cast<double>(users.size());
  report.ndcg = ndcg / static_cast<double>(users.size());
  return report;
}

MetricsReport evaluate(const Model& model, const SplitDataset& dataset, EvalSplit split,
                       const EvalOptions& options) {
  const InteractionGraph& train = dataset.train;
  const std::size_t n = train.num_users();
  const Matrix final = final_embeddings(model, train, options.exec);
  auto exclude = group_by_user(train.edges(), n);
  if (split == EvalSplit::kTest && options.exclude_validation) {
    const auto valid = group_by_user(dataset.validation, n);
    for (std::size_t u = 0; u < n; ++u) {
      exclude[u].insert(exclude[u].end(), valid[u].begin(), valid[u].end());
      std::sort(exclude[u].begin(), exclude[u].end());
    }
  }
  const auto& pairs = split == EvalSplit::kValidation ? dataset.validation : dataset.test;
  return evaluate_rankings(final, n, group_by_user(pairs, n), exclude, options.k, options.exec);
}

MetricsReport evaluate_unfiltered(const Model& model, const InteractionGraph& graph,
                                  std::span<const Interaction> held_out, std::size_t k,
                                  Exec exec) {
  const Matrix final = final_embeddings(model, graph, exec);
  return evaluate_rankings(final, graph.num_users(), group_by_user(held_out, graph.num_users()),
                           {}, k, exec);
}

}  // namespace gacse
