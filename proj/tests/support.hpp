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
// Fixtures and scalar-loop oracles shared by the unit suites and the
// acceptance binary. Oracles here never call the library's kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gacse/graph.hpp"
#include "gacse/model.hpp"
#include "gacse/sampling.hpp"

namespace gacse::testing {

// Random bipartite graph where every user and every item has at least one edge.
inline InteractionGraph random_graph(std::mt19937_64& rng, std::size_t users, std::size_t items,
                                     double p) {
  std::bernoulli_distribution coin(p);
  std::set<Interaction> edges;
  for (std::uint32_t u = 0; u < users; ++u) {
    for (std::uint32_t i = 0; i < items; ++i) {
      if (coin(rng)) edges.insert({u, i});
    }
  }
  std::uniform_int_distribution<std::uint32_t> pick_item(0, static_cast<std::uint32_t>(items - 1));
  std::uniform_int_distribution<std::uint32_t> pick_user(0, static_cast<std::uint32_t>(users - 1));
  for (std::uint32_t u = 0; u < users; ++u) edges.insert({u, pick_item(rng)});
  for (std::uint32_t i = 0; i < items; ++i) edges.insert({pick_user(rng), i});
  const std::vector<Interaction> list(edges.begin(), edges.end());
  return InteractionGraph(users, items, list);
}

// Model whose every entry is uniform in [-scale, scale].
inline Model random_model(const Dims& dims, std::size_t users, std::size_t items,
                          std::uint64_t seed, Real scale = 0.5, Real slope = 0.2) {
  Model model = init_model(dims, users, items, seed, slope);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<Real> u(-scale, scale);
  model.params.for_each([&](const char*, Matrix& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  });
  return model;
}

// Block-structured log: users and items fall into `blocks` equal groups and
// each within-block pair is present with probability p_in.
inline RawInteractions block_interactions(std::size_t users, std::size_t items,
                                          std::size_t blocks, double p_in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p_in);
  RawInteractions raw;
  const std::size_t ub = users / blocks;
  const std::size_t ib = items / blocks;
  for (std::size_t u = 0; u < users; ++u) {
    const std::size_t b = std::min(u / ub, blocks - 1);
    for (std::size_t i = b * ib; i < (b + 1) * ib; ++i) {
      if (coin(rng)) raw.pairs.emplace_back("u" + std::to_string(u), "i" + std::to_string(i));
    }
  }
  return raw;
}

inline SplitDataset block_dataset(std::uint64_t seed) {
  return split(block_interactions(50, 50, 5, 0.8, seed), 0.8, 0.1, seed);
}

namespace oracle {

using Vec = std::vector<Real>;

inline Real leaky(Real x, Real slope) { return x > 0 ? x : slope * x; }

inline Vec row(const Matrix& m, std::size_t r) {
  Vec out(static_cast<std::size_t>(m.cols()));
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = m(r, c);
  return out;
}

// e1 of one node over its full neighborhood.
inline Vec warmup(const Model& model, const InteractionGraph& g, NodeId x) {
  const Matrix& e = model.params.embedding;
  const std::size_t d0 = model.dims.d0;
  Vec acc = row(e, x);
  const auto nbrs = g.neighbors(x);
  for (NodeId n : nbrs) {
    const Real w = 1.0 / std::sqrt(static_cast<Real>(nbrs.size()) * static_cast<Real>(g.degree(n)));
    for (std::size_t c = 0; c < d0; ++c) acc[c] += w * e(n, c);
  }
  Vec out(model.dims.d1, 0.0);
  for (std::size_t r = 0; r < model.dims.d1; ++r) {
    Real s = 0;
    for (std::size_t c = 0; c < d0; ++c) s += model.params.w0(r, c) * acc[c];
    out[r] = leaky(s, model.leaky_slope);
  }
  return out;
}

inline Real score(const Model& model, const Vec& e1_t, const Vec& e1_n) {
  const std::size_t d1 = model.dims.d1;
  Real total = 0;
  for (std::size_t r = 0; r < model.dims.d2; ++r) {
    Real h = 0;
    for (std::size_t c = 0; c < d1; ++c) h += model.params.p(r, c) * e1_t[c];
    for (std::size_t c = 0; c < d1; ++c) h += model.params.p(r, d1 + c) * e1_n[c];
    total += model.params.v(r, 0) * std::tanh(h);
  }
  return total;
}

inline Vec softmax(const Vec& s) {
  Vec out(s.size());
  if (s.empty()) return out;
  const Real mx = *std::max_element(s.begin(), s.end());
  Real z = 0;
  for (std::size_t k = 0; k < s.size(); ++k) z += (out[k] = std::exp(s[k] - mx));
  for (Real& x : out) x /= z;
  return out;
}

struct AttentionOut {
  Vec weights;
  Vec e2;
};

// e2 of `target` attending over `sampled` (global ids), warm-up on full neighborhoods.
inline AttentionOut attention(const Model& model, const InteractionGraph& g, NodeId target,
                              const std::vector<NodeId>& sampled) {
  const std::size_t d1 = model.dims.d1, d3 = model.dims.d3;
  const Vec e1_t = warmup(model, g, target);
  std::vector<Vec> e1_n;
  Vec scores;
  for (NodeId n : sampled) {
    e1_n.push_back(warmup(model, g, n));
    scores.push_back(score(model, e1_t, e1_n.back()));
  }
  AttentionOut out;
  out.weights = softmax(scores);
  Vec s(d1, 0.0);
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    for (std::size_t c = 0; c < d1; ++c) s[c] += out.weights[k] * e1_n[k][c];
  }
  out.e2.assign(d3, 0.0);
  for (std::size_t r = 0; r < d3; ++r) {
    Real a = 0, b = 0;
    for (std::size_t c = 0; c < d1; ++c) {
      a += model.params.w1(r, c) * (e1_t[c] + s[c]);
      b += model.params.w2(r, c) * (e1_t[c] * s[c]);
    }
    out.e2[r] = leaky(a, model.leaky_slope) + leaky(b, model.leaky_slope);
  }
  return out;
}

inline Real log1pexp(Real x) { return x > 30 ? x : std::log(1.0 + std::exp(x)); }

// Sum of -log sigmoid(x) over positives and -log(1 - sigmoid(x)) over negatives.
inline Real similarity(const Model& model, const std::vector<SimilarityPairSet>& user_sets,
                       const std::vector<SimilarityPairSet>& item_sets) {
  const std::size_t d0 = model.dims.d0;
  auto dot = [&](NodeId anchor, NodeId other) {
    const bool user = anchor < model.num_users;
    const Matrix& ctx = user ? model.params.user_context : model.params.item_context;
    const std::size_t r = user ? other : other - model.num_users;
    Real s = 0;
    for (std::size_t c = 0; c < d0; ++c) s += model.params.embedding(anchor, c) * ctx(r, c);
    return s;
  };
  Real total = 0;
  for (const auto* sets : {&user_sets, &item_sets}) {
    for (const auto& set : *sets) {
      for (NodeId p : set.positives) total += log1pexp(-dot(set.anchor, p));
      for (NodeId n : set.negatives) total += log1pexp(dot(set.anchor, n));
    }
  }
  return total;
}

// Brute-force metrics: scores every non-excluded item with a full scan,
// selects the top k by repeated argmax with ascending-index tie breaks.
struct UserMetrics {
  bool defined = false;
  double recall = 0;
  double ndcg = 0;
};

inline UserMetrics user_metrics(const std::vector<Real>& scores,
                                const std::vector<std::uint32_t>& exclude,
                                const std::vector<std::uint32_t>& held_out, std::size_t k) {
  UserMetrics out;
  if (held_out.empty()) return out;
  out.defined = true;
  std::vector<bool> taken(scores.size(), false);
  for (auto e : exclude) taken[e] = true;
  std::vector<std::uint32_t> top;
  for (std::size_t r = 0; r < k; ++r) {
    std::int64_t best = -1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (taken[i]) continue;
      if (best < 0 || scores[i] > scores[best]) best = static_cast<std::int64_t>(i);
    }
    if (best < 0) break;
    taken[best] = true;
    top.push_back(static_cast<std::uint32_t>(best));
  }
  double hits = 0, dcg = 0, idcg = 0;
  for (std::size_t r = 0; r < top.size(); ++r) {
    if (std::find(held_out.begin(), held_out.end(), top[r]) != held_out.end()) {
      hits += 1;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  for (std::size_t r = 0; r < std::min(k, held_out.size()); ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  out.recall = hits / static_cast<double>(held_out.size());
  out.ndcg = dcg / idcg;
  return out;
}

// Repeated peeling: drop every node below min_degree, rebuild, repeat.
inline std::set<std::pair<std::string, std::string>> peel(
    std::vector<std::pair<std::string, std::string>> pairs, std::size_t min_degree) {
  std::set<std::pair<std::string, std::string>> current(pairs.begin(), pairs.end());
  while (true) {
    std::map<std::string, std::size_t> du, di;
    for (const auto& [u, i] : current) {
      ++du[u];
      ++di[i];
    }
    std::set<std::pair<std::string, std::string>> next;
    for (const auto& p : current) {
      if (du[p.first] >= min_degree && di[p.second] >= min_degree) next.insert(p);
    }
    if (next == current) return current;
    current = std::move(next);
  }
}

}  // namespace oracle

// Central finite differences of f over every entry of every table, compared
// entrywise to `analytic`; an entry passes on either tolerance.
struct GradCheckResult {
  std::size_t entries = 0;
  double worst_rel = 0;
  std::string worst;
  bool ok = true;
};

inline GradCheckResult gradient_check(Model& model, const Tables& analytic,
                                      const std::function<Real(const Model&)>& f, Real h,
                                      Real rel_tol, Real abs_tol) {
  GradCheckResult res;
  Tables* params = &model.params;
  auto check_table = [&](const char* name, Matrix& m, const Matrix& g) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const Real orig = m.data()[k];
      m.data()[k] = orig + h;
      const Real up = f(model);
      m.data()[k] = orig - h;
      const Real down = f(model);
      m.data()[k] = orig;
      const Real fd = (up - down) / (2 * h);
      const Real an = g.data()[k];
      const Real diff = std::abs(fd - an);
      const Real rel = diff / std::max(std::abs(fd), std::abs(an));
      ++res.entries;
      const bool pass = diff <= abs_tol || rel <= rel_tol;
      if (diff > abs_tol && rel > res.worst_rel) {
        res.worst_rel = rel;
        res.worst = std::string(name) + "[" + std::to_string(k) + "] analytic " +
                    std::to_string(an) + " numeric " + std::to_string(fd);
      }
      res.ok = res.ok && pass;
    }
  };
  check_table("E", params->embedding, analytic.embedding);
  check_table("E_UC", params->user_context, analytic.user_context);
  check_table("E_IC", params->item_context, analytic.item_context);
  check_table("W0", params->w0, analytic.w0);
  check_table("W1", params->w1, analytic.w1);
  check_table("W2", params->w2, analytic.w2);
  check_table("P", params->p, analytic.p);
  check_table("V", params->v, analytic.v);
  return res;
}

}  // namespace gacse::testing
