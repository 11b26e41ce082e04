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
#include <span>
#include <string_view>
#include <vector>

#include "gacse/types.hpp"

namespace gacse {

struct Dims {
  std::size_t d0 = 64;  // base embedding
  std::size_t d1 = 64;  // warm-up output
  std::size_t d2 = 64;  // attention projection
  std::size_t d3 = 64;  // attention aggregation output
  friend bool operator==(const Dims&, const Dims&) = default;
};

// Every trainable table. The first three form the embedding state, the rest
// are the propagation weights. The same struct shapes gradients and Adam
// moments.
struct Tables {
  Matrix embedding;     // (N + M) x d0, users first
  Matrix user_context;  // N x d0
  Matrix item_context;  // M x d0
  Matrix w0;            // d1 x d0
  Matrix w1;            // d3 x d1
  Matrix w2;            // d3 x d1
  Matrix p;             // d2 x 2*d1
  Matrix v;             // d2 x 1

  static constexpr std::size_t kCount = 8;
  static constexpr std::size_t kNumEmbeddingTables = 3;

  template <typename F>
  void for_each(F&& f) {
    f("E", embedding); f("E_UC", user_context); f("E_IC", item_context);
    f("W0", w0); f("W1", w1); f("W2", w2); f("P", p); f("V", v);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("E", embedding); f("E_UC", user_context); f("E_IC", item_context);
    f("W0", w0); f("W1", w1); f("W2", w2); f("P", p); f("V", v);
  }

  // Tables of the same shapes filled with zeros.
  static Tables zeros_like(const Tables& other);
  void set_zero();
  std::size_t num_entries() const;
  bool same_shape(const Tables& other) const;
};

struct Model {
  Dims dims;
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  Real leaky_slope = 0.2;
  std::uint64_t seed = 0;
  Tables params;

  std::size_t num_nodes() const { return num_users + num_items; }
  std::size_t final_dim() const { return dims.d0 + dims.d3; }
};

// Glorot-uniform initialization, bound sqrt(6 / (rows + cols)) per table.
Model init_model(const Dims& dims, std::size_t num_users, std::size_t num_items,
                 std::uint64_t seed, Real leaky_slope = 0.2);

// Gradient accumulators plus, for the three embedding tables, which rows the
// current batch touched. Untouched rows hold zeros.
struct GradientSet {
  Tables grads;
  std::vector<std::uint8_t> touched_embedding;
  std::vector<std::uint8_t> touched_user_context;
  std::vector<std::uint8_t> touched_item_context;

  static GradientSet zeros_like(const Model& model);
  void reset();
  void touch_all();
};

// Symmetric warm-up propagation weight 1 / sqrt(deg_u * deg_i).
Real warmup_weight(std::size_t deg_u, std::size_t deg_i);

// V^T tanh(P [e1_node || e1_neighbor]).
Real attention_score(std::span<const Real> e1_node, std::span<const Real> e1_neighbor,
                     const Matrix& p, const Matrix& v);

// Max-shifted softmax. Throws on an empty score list.
std::vector<Real> attention_normalize(std::span<const Real> scores);

// LeakyReLU(W1 (e + s)) + LeakyReLU(W2 (e * s)) with s = sum_k w_k * n_k.
Vector attention_aggregate(std::span<const Real> e1_node, const Matrix& neighbor_e1,
                           std::span<const Real> weights, const Matrix& w1, const Matrix& w2,
                           Real leaky_slope);

// <e0_a || e2_a, e0_b || e2_b>.
Real predict(std::span<const Real> e0_a, std::span<const Real> e2_a,
             std::span<const Real> e0_b, std::span<const Real> e2_b);

inline std::span<const Real> row_span(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace gacse
