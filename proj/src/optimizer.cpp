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
#include "gacse/optimizer.hpp"

#include <cmath>
#include <string>

#include "gacse/error.hpp"

namespace gacse {

AdamState make_adam_state(const Model& model, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.m = Tables::zeros_like(model.params);
  state.v = Tables::zeros_like(model.params);
  state.row_steps_embedding.assign(model.num_nodes(), 0);
  state.row_steps_user_context.assign(model.num_users, 0);
  state.row_steps_item_context.assign(model.num_items, 0);
  return state;
}

namespace {

struct Moments {
  Real beta1;
  Real beta2;
  Real lr;
  Real eps;

  template <typename P, typename G, typename M, typename V>
  void apply(P&& param, const G& grad, M&& m, V&& v, std::uint64_t t) const {
    const Real c1 = 1.0 - std::pow(beta1, static_cast<Real>(t));
    const Real c2 = 1.0 - std::pow(beta2, static_cast<Real>(t));
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      const Real g = grad(k);
      m(k) = beta1 * m(k) + (1 - beta1) * g;
      v(k) = beta2 * v(k) + (1 - beta2) * g * g;
      param(k) -= lr * (m(k) / c1) / (std::sqrt(v(k) / c2) + eps);
    }
  }
};

void check_finite(const GradientSet& grads) {
  grads.grads.for_each([](const char* name, const Matrix& g) {
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      if (!std::isfinite(g.data()[k])) {
        throw Error(ErrorCategory::kNumeric,
                    std::string("non-finite gradient in ") + name + " at row " +
                        std::to_string(k / g.cols()) + ", column " + std::to_string(k % g.cols()));
      }
    }
  });
}

void update_table(const Moments& adam, Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                  std::uint64_t t) {
  Eigen::Map<Vector> p(param.data(), param.size());
  Eigen::Map<const Vector> g(grad.data(), grad.size());
  Eigen::Map<Vector> mm(m.data(), m.size());
  Eigen::Map<Vector> vv(v.data(), v.size());
  adam.apply(p, g, mm, vv, t);
}

void update_rows(const Moments& adam, Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                 const std::vector<std::uint8_t>& touched, std::vector<std::uint64_t>& row_steps,
                 bool sparse, std::uint64_t global_step) {
  for (Eigen::Index r = 0; r < param.rows(); ++r) {
    if (sparse && !touched[r]) continue;
    row_steps[r] = sparse ? row_steps[r] + 1 : global_step;
    adam.apply(param.row(r), grad.row(r), m.row(r), v.row(r), row_steps[r]);
  }
}

}  // namespace

void adam_step(Model& model, const GradientSet& grads, AdamState& state) {
  if (!grads.grads.same_shape(model.params) || !state.m.same_shape(model.params)) {
    throw Error(ErrorCategory::kShapeMismatch, "adam_step: shapes do not match the model");
  }
  check_finite(grads);
  const AdamConfig& c = state.config;
  const Moments adam{c.beta1, c.beta2, c.learning_rate, c.epsilon};
  ++state.step;

  Tables& p = model.params;
  const Tables& g = grads.grads;
  update_rows(adam, p.embedding, g.embedding, state.m.embedding, state.v.embedding,
              grads.touched_embedding, state.row_steps_embedding, c.sparse, state.step);
  update_rows(adam, p.user_context, g.user_context, state.m.user_context, state.v.user_context,
              grads.touched_user_context, state.row_steps_user_context, c.sparse, state.step);
  update_rows(adam, p.item_context, g.item_context, state.m.item_context, state.v.item_context,
              grads.touched_item_context, state.row_steps_item_context, c.sparse, state.step);
  update_table(adam, p.w0, g.w0, state.m.w0, state.v.w0, state.step);
  update_table(adam, p.w1, g.w1, state.m.w1, state.v.w1, state.step);
  update_table(adam, p.w2, g.w2, state.m.w2, state.v.w2, state.step);
  update_table(adam, p.p, g.p, state.m.p, state.v.p, state.step);
  update_table(adam, p.v, g.v, state.m.v, state.v.v, state.step);
}

}  // namespace gacse
