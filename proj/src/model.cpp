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
#include "gacse/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gacse/error.hpp"
#include "gacse/kernels.hpp"
#include "gacse/sampling.hpp"

namespace gacse {

Tables Tables::zeros_like(const Tables& other) {
  Tables out;
  out.embedding = Matrix::Zero(other.embedding.rows(), other.embedding.cols());
  out.user_context = Matrix::Zero(other.user_context.rows(), other.user_context.cols());
  out.item_context = Matrix::Zero(other.item_context.rows(), other.item_context.cols());
  out.w0 = Matrix::Zero(other.w0.rows(), other.w0.cols());
  out.w1 = Matrix::Zero(other.w1.rows(), other.w1.cols());
  out.w2 = Matrix::Zero(other.w2.rows(), other.w2.cols());
  out.p = Matrix::Zero(other.p.rows(), other.p.cols());
  out.v = Matrix::Zero(other.v.rows(), other.v.cols());
  return out;
}

void Tables::set_zero() {
  for_each([](const char*, Matrix& m) { m.setZero(); });
}

std::size_t Tables::num_entries() const {
  std::size_t total = 0;
  for_each([&](const char*, const Matrix& m) { total += static_cast<std::size_t>(m.size()); });
  return total;
}

bool Tables::same_shape(const Tables& other) const {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> a;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> b;
  for_each([&](const char*, const Matrix& m) { a.emplace_back(m.rows(), m.cols()); });
  other.for_each([&](const char*, const Matrix& m) { b.emplace_back(m.rows(), m.cols()); });
  return a == b;
}

Model init_model(const Dims& dims, std::size_t num_users, std::size_t num_items,
                 std::uint64_t seed, Real leaky_slope) {
  if (num_users == 0 || num_items == 0) {
    throw Error(ErrorCategory::kConfig, "model needs at least one user and one item");
  }
  if (dims.d0 == 0 || dims.d1 == 0 || dims.d2 == 0 || dims.d3 == 0) {
    throw Error(ErrorCategory::kConfig, "all dimensions must be >= 1");
  }
  Model model;
  model.dims = dims;
  model.num_users = num_users;
  model.num_items = num_items;
  model.leaky_slope = leaky_slope;
  model.seed = seed;
  const auto n = static_cast<Eigen::Index>(num_users);
  const auto m = static_cast<Eigen::Index>(num_items);
  const auto d0 = static_cast<Eigen::Index>(dims.d0);
  const auto d1 = static_cast<Eigen::Index>(dims.d1);
  const auto d2 = static_cast<Eigen::Index>(dims.d2);
  const auto d3 = static_cast<Eigen::Index>(dims.d3);
  Tables& t = model.params;
  t.embedding.resize(n + m, d0);
  t.user_context.resize(n, d0);
  t.item_context.resize(m, d0);
  t.w0.resize(d1, d0);
  t.w1.resize(d3, d1);
  t.w2.resize(d3, d1);
  t.p.resize(d2, 2 * d1);
  t.v.resize(d2, 1);

  Rng rng = make_stream(seed, 0);
  t.for_each([&](const char*, Matrix& table) {
    const Real bound = std::sqrt(6.0 / static_cast<Real>(table.rows() + table.cols()));
    std::uniform_real_distribution<Real> dist(-bound, bound);
    for (Eigen::Index k = 0; k < table.size(); ++k) table.data()[k] = dist(rng);
  });
  return model;
}

GradientSet GradientSet::zeros_like(const Model& model) {
  GradientSet g;
  g.grads = Tables::zeros_like(model.params);
  g.touched_embedding.assign(model.num_nodes(), 0);
  g.touched_user_context.assign(model.num_users, 0);
  g.touched_item_context.assign(model.num_items, 0);
  return g;
}

void GradientSet::reset() {
  grads.set_zero();
  std::fill(touched_embedding.begin(), touched_embedding.end(), 0);
  std::fill(touched_user_context.begin(), touched_user_context.end(), 0);
  std::fill(touched_item_context.begin(), touched_item_context.end(), 0);
}

void GradientSet::touch_all() {
  std::fill(touched_embedding.begin(), touched_embedding.end(), 1);
  std::fill(touched_user_context.begin(), touched_user_context.end(), 1);
  std::fill(touched_item_context.begin(), touched_item_context.end(), 1);
}

Real warmup_weight(std::size_t deg_u, std::size_t deg_i) {
  if (deg_u == 0 || deg_i == 0) {
    throw Error(ErrorCategory::kInvariant, "warm-up weight needs nonzero degrees");
  }
  return 1.0 / std::sqrt(static_cast<Real>(deg_u) * static_cast<Real>(deg_i));
}

Real attention_score(std::span<const Real> e1_node, std::span<const Real> e1_neighbor,
                     const Matrix& p, const Matrix& v) {
  const auto d1 = static_cast<Eigen::Index>(e1_node.size());
  if (p.cols() != 2 * d1 || static_cast<Eigen::Index>(e1_neighbor.size()) != d1 ||
      v.rows() != p.rows()) {
    throw Error(ErrorCategory::kShapeMismatch, "attention_score: shapes do not conform");
  }
  const Eigen::Map<const Vector> a(e1_node.data(), d1);
  const Eigen::Map<const Vector> b(e1_neighbor.data(), d1);
  const Vector hidden = (p.leftCols(d1) * a + p.rightCols(d1) * b).array().tanh().matrix();
  return v.col(0).dot(hidden);
}

std::vector<Real> attention_normalize(std::span<const Real> scores) {
  if (scores.empty()) throw Error(ErrorCategory::kInvariant, "softmax over an empty set");
  const Real shift = *std::max_element(scores.begin(), scores.end());
  std::vector<Real> out(scores.size());
  Real total = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - shift);
    total += out[k];
  }
  for (Real& w : out) w /= total;
  return out;
}

Vector attention_aggregate(std::span<const Real> e1_node, const Matrix& neighbor_e1,
                           std::span<const Real> weights, const Matrix& w1, const Matrix& w2,
                           Real leaky_slope) {
  const auto d1 = static_cast<Eigen::Index>(e1_node.size());
  if (neighbor_e1.cols() != d1 || neighbor_e1.rows() != static_cast<Eigen::Index>(weights.size()) ||
      w1.cols() != d1 || w2.cols() != d1 || w1.rows() != w2.rows()) {
    throw Error(ErrorCategory::kShapeMismatch, "attention_aggregate: shapes do not conform");
  }
  const Eigen::Map<const Vector> self(e1_node.data(), d1);
  Vector summary = Vector::Zero(d1);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    summary += weights[k] * neighbor_e1.row(static_cast<Eigen::Index>(k)).transpose();
  }
  const Vector a = w1 * (self + summary);
  const Vector b = w2 * self.cwiseProduct(summary);
  Vector out(a.size());
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    out[j] = leaky_relu(a[j], leaky_slope) + leaky_relu(b[j], leaky_slope);
  }
  return out;
}

Real predict(std::span<const Real> e0_a, std::span<const Real> e2_a,
             std::span<const Real> e0_b, std::span<const Real> e2_b) {
  if (e0_a.size() != e0_b.size() || e2_a.size() != e2_b.size()) {
    throw Error(ErrorCategory::kShapeMismatch, "predict: embedding sizes differ");
  }
  Real y = 0;
  for (std::size_t k = 0; k < e0_a.size(); ++k) y += e0_a[k] * e0_b[k];
  for (std::size_t k = 0; k < e2_a.size(); ++k) y += e2_a[k] * e2_b[k];
  return y;
}

void PropagationPlan::finalize() {
  const std::size_t warm = num_warm();

  // Warm-up reverse index: (row, slot, weight) grouped by base row.
  struct Source {
    NodeId row;
    std::uint32_t slot;
    Real weight;
  };
  std::vector<Source> sources;
  sources.reserve(warm + warm_neighbors.size());
  for (std::uint32_t s = 0; s < warm; ++s) {
    sources.push_back({warm_nodes[s], s, 1.0});
    for (std::size_t e = warm_offsets[s]; e < warm_offsets[s + 1]; ++e) {
      sources.push_back({warm_neighbors[e], s, warm_weights[e]});
    }
  }
  std::stable_sort(sources.begin(), sources.end(),
                   [](const Source& a, const Source& b) { return a.row < b.row; });
  source_rows.clear();
  source_offsets.assign(1, 0);
  source_slot.clear();
  source_weight.clear();
  for (const Source& src : sources) {
    if (source_rows.empty() || source_rows.back() != src.row) {
      if (!source_rows.empty()) source_offsets.push_back(source_slot.size());
      source_rows.push_back(src.row);
    }
    source_slot.push_back(src.slot);
    source_weight.push_back(src.weight);
  }
  if (!source_rows.empty()) source_offsets.push_back(source_slot.size());

  // Attention reverse index by destination slot (counting sort keeps edge order).
  edge_target.assign(num_att_edges(), 0);
  for (std::uint32_t t = 0; t < num_targets(); ++t) {
    for (std::size_t e = att_offsets[t]; e < att_offsets[t + 1]; ++e) edge_target[e] = t;
  }
  into_offsets.assign(warm + 1, 0);
  for (std::uint32_t slot : att_neighbors) ++into_offsets[slot + 1];
  std::partial_sum(into_offsets.begin(), into_offsets.end(), into_offsets.begin());
  into_edges.assign(num_att_edges(), 0);
  std::vector<std::size_t> cursor(into_offsets.begin(), into_offsets.end() - 1);
  for (std::size_t e = 0; e < num_att_edges(); ++e) into_edges[cursor[att_neighbors[e]]++] = e;

  slot_target.assign(warm, -1);
  for (std::uint32_t t = 0; t < num_targets(); ++t) {
    if (slot_target[targets[t]] != -1) {
      throw Error(ErrorCategory::kInvariant, "a warm slot is listed as a target twice");
    }
    slot_target[targets[t]] = t;
  }
}

}  // namespace gacse
