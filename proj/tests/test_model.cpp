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
#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <random>

#include "gacse/error.hpp"
#include "gacse/kernels.hpp"
#include "gacse/model.hpp"
#include "gacse/objective.hpp"
#include "gacse/propagation.hpp"
#include "support.hpp"

namespace gacse {
namespace {

namespace oracle = testing::oracle;

double max_abs_diff(std::span<const Real> a, const std::vector<Real>& b) {
  EXPECT_EQ(a.size(), b.size());
  double worst = 0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

bool bitwise_equal(const Tables& a, const Tables& b) {
  return bitwise_equal(a.embedding, b.embedding) && bitwise_equal(a.user_context, b.user_context) &&
         bitwise_equal(a.item_context, b.item_context) && bitwise_equal(a.w0, b.w0) &&
         bitwise_equal(a.w1, b.w1) && bitwise_equal(a.w2, b.w2) && bitwise_equal(a.p, b.p) &&
         bitwise_equal(a.v, b.v);
}

TEST(Init, ShapesBoundsAndSeeding) {
  const Dims dims{5, 6, 7, 8};
  const Model m = init_model(dims, 4, 3, 11);
  EXPECT_EQ(m.params.embedding.rows(), 7);
  EXPECT_EQ(m.params.embedding.cols(), 5);
  EXPECT_EQ(m.params.user_context.rows(), 4);
  EXPECT_EQ(m.params.item_context.rows(), 3);
  EXPECT_EQ(m.params.w0.rows(), 6);
  EXPECT_EQ(m.params.w0.cols(), 5);
  EXPECT_EQ(m.params.w1.rows(), 8);
  EXPECT_EQ(m.params.w2.cols(), 6);
  EXPECT_EQ(m.params.p.rows(), 7);
  EXPECT_EQ(m.params.p.cols(), 12);
  EXPECT_EQ(m.params.v.rows(), 7);
  EXPECT_EQ(m.params.v.cols(), 1);
  m.params.for_each([](const char* name, const Matrix& t) {
    const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    EXPECT_LE(t.cwiseAbs().maxCoeff(), bound) << name;
    EXPECT_GT(t.cwiseAbs().maxCoeff(), 0.0) << name;
  });
  EXPECT_TRUE(bitwise_equal(m.params, init_model(dims, 4, 3, 11).params));
  EXPECT_FALSE(bitwise_equal(m.params, init_model(dims, 4, 3, 12).params));
}

TEST(WarmupWeight, SymmetricNormalization) {
  EXPECT_DOUBLE_EQ(warmup_weight(4, 9), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(warmup_weight(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(warmup_weight(3, 5), warmup_weight(5, 3));
}

TEST(AttentionNormalize, SumsToOneAndIsShiftInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<Real> u(-50, 50);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Real> s(1 + trial % 17);
    for (Real& x : s) x = u(rng);
    const auto w = attention_normalize(s);
    Real total = 0;
    for (Real x : w) {
      EXPECT_GE(x, 0.0);
      total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    const Real c = u(rng) * 10;
    std::vector<Real> shifted = s;
    for (Real& x : shifted) x += c;
    const auto w2 = attention_normalize(shifted);
    for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(w[k], w2[k], 1e-9);
  }
  const std::vector<Real> huge = {1000.0, 999.0};
  const auto w = attention_normalize(huge);
  EXPECT_TRUE(std::isfinite(w[0]));
  EXPECT_NEAR(w[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(SingleNodeOps, MatchScalarOracle) {
  const Dims dims{3, 4, 5, 2};
  const Model m = testing::random_model(dims, 2, 2, 5);
  std::vector<Real> a = {0.3, -0.2, 0.7, 0.1}, b = {-0.5, 0.4, 0.2, 0.9};
  EXPECT_NEAR(attention_score(a, b, m.params.p, m.params.v), oracle::score(m, a, b), 1e-14);
  EXPECT_NEAR(predict(std::vector<Real>{1, 2}, std::vector<Real>{3}, std::vector<Real>{4, 5},
                      std::vector<Real>{6}),
              1 * 4 + 2 * 5 + 3 * 6, 0.0);
}

struct Instance {
  InteractionGraph graph;
  Model model;
  MiniBatch batch;
};

Instance random_instance(std::uint64_t seed, std::size_t warmup_cap = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(3, 9), dim(1, 5);
  const std::size_t users = size(rng), items = size(rng);
  Instance inst;
  inst.graph = testing::random_graph(rng, users, items, 0.35);
  const Dims dims{dim(rng), dim(rng), dim(rng), dim(rng)};
  inst.model = testing::random_model(dims, users, items, seed, 0.8, 0.1 + 0.05 * (seed % 4));
  SamplerConfig cfg;
  cfg.batch_size = 1 + seed % 5;
  cfg.fan_in = 1 + seed % 4;
  cfg.warmup_cap = warmup_cap;
  cfg.num_pos = cfg.num_neg = 2;
  // Saturated users cannot produce negatives; those instances use only the first user.
  BatchSampler sampler(inst.graph, cfg, seed);
  try {
    inst.batch = sampler.next();
  } catch (const Error&) {
    return random_instance(seed + 1000, warmup_cap);
  }
  return inst;
}

TEST(Propagation, BatchForwardMatchesScalarOracleOn100Instances) {
  double worst_e1 = 0, worst_e2 = 0, worst_w = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Instance inst = random_instance(seed);
    const ForwardTrace trace = forward(inst.model, plan_for_batch(inst.graph, inst.batch));
    for (std::size_t w = 0; w < trace.plan.num_warm(); ++w) {
      const NodeId node = trace.plan.warm_nodes[w];
      worst_e1 = std::max(worst_e1, max_abs_diff(row_span(trace.warmup.out, w),
                                                 oracle::warmup(inst.model, inst.graph, node)));
    }
    for (std::uint32_t t = 0; t < inst.batch.neighbor_samples.size(); ++t) {
      const auto& s = inst.batch.neighbor_samples[t];
      const auto expected = oracle::attention(inst.model, inst.graph, s.node, s.neighbors);
      worst_e2 = std::max(worst_e2, max_abs_diff(trace.e2(s.node), expected.e2));
      worst_w = std::max(worst_w, max_abs_diff(trace.attention_weights(t), expected.weights));
    }
  }
  EXPECT_LE(worst_e1, 1e-10);
  EXPECT_LE(worst_e2, 1e-10);
  EXPECT_LE(worst_w, 1e-10);
}

TEST(Propagation, CappedWarmupRescalesTheSample) {
  const Instance inst = random_instance(17, 2);
  ASSERT_FALSE(inst.batch.warmup_samples.empty());
  const ForwardTrace trace = forward(inst.model, plan_for_batch(inst.graph, inst.batch));
  const Model& m = inst.model;
  for (const auto& s : inst.batch.warmup_samples) {
    const std::size_t slot = std::find(trace.plan.warm_nodes.begin(), trace.plan.warm_nodes.end(),
                                       s.node) -
                             trace.plan.warm_nodes.begin();
    const double scale = static_cast<double>(inst.graph.degree(s.node)) / s.neighbors.size();
    std::vector<Real> acc = oracle::row(m.params.embedding, s.node);
    for (NodeId n : s.neighbors) {
      const double w = scale / std::sqrt(static_cast<double>(inst.graph.degree(s.node)) *
                                         static_cast<double>(inst.graph.degree(n)));
      for (std::size_t c = 0; c < m.dims.d0; ++c) acc[c] += w * m.params.embedding(n, c);
    }
    std::vector<Real> expected(m.dims.d1);
    for (std::size_t r = 0; r < m.dims.d1; ++r) {
      Real z = 0;
      for (std::size_t c = 0; c < m.dims.d0; ++c) z += m.params.w0(r, c) * acc[c];
      expected[r] = oracle::leaky(z, m.leaky_slope);
    }
    EXPECT_LE(max_abs_diff(row_span(trace.warmup.out, slot), expected), 1e-12);
  }
}

TEST(Propagation, FinalEmbeddingsUseFullNeighborhoods) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = random_instance(seed);
    const Matrix fin = final_embeddings(inst.model, inst.graph);
    const std::size_t d0 = inst.model.dims.d0;
    for (NodeId x = 0; x < inst.graph.num_nodes(); ++x) {
      const auto nb = inst.graph.neighbors(x);
      const auto expected =
          oracle::attention(inst.model, inst.graph, x, std::vector<NodeId>(nb.begin(), nb.end()));
      const auto row = row_span(fin, x);
      for (std::size_t c = 0; c < d0; ++c) EXPECT_EQ(row[c], inst.model.params.embedding(x, c));
      EXPECT_LE(max_abs_diff(row.subspan(d0), expected.e2), 1e-10);
    }
  }
}

TEST(Propagation, ShapeMismatchIsReported) {
  const Instance inst = random_instance(3);
  const Model other = init_model(inst.model.dims, inst.model.num_users + 1, inst.model.num_items, 1);
  try {
    final_embeddings(other, inst.graph);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kShapeMismatch);
  }
}

TEST(Kernels, ParallelMatchesSerialBitwise) {
  omp_set_num_threads(4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = random_instance(seed);
    const auto plan = plan_for_batch(inst.graph, inst.batch);
    const ForwardTrace s = forward(inst.model, plan, Exec::kSerial);
    const ForwardTrace p = forward(inst.model, plan, Exec::kParallel);
    ASSERT_TRUE(bitwise_equal(s.warmup.out, p.warmup.out));
    ASSERT_TRUE(bitwise_equal(s.attention.out, p.attention.out));

    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> g;
    Matrix grad_e2(static_cast<Eigen::Index>(plan.num_targets()),
                   static_cast<Eigen::Index>(inst.model.dims.d3));
    for (Eigen::Index k = 0; k < grad_e2.size(); ++k) grad_e2.data()[k] = g(rng);
    GradientSet gs = GradientSet::zeros_like(inst.model), gp = GradientSet::zeros_like(inst.model);
    backward(inst.model, s, grad_e2, gs, Exec::kSerial);
    backward(inst.model, p, grad_e2, gp, Exec::kParallel);
    EXPECT_TRUE(bitwise_equal(gs.grads, gp.grads)) << "seed " << seed;
    EXPECT_EQ(gs.touched_embedding, gp.touched_embedding);

    LossConfig lc;
    GradientSet ls = GradientSet::zeros_like(inst.model), lp = GradientSet::zeros_like(inst.model);
    const auto a = total_loss(inst.model, inst.graph, inst.batch, lc, &ls, Exec::kSerial);
    const auto b = total_loss(inst.model, inst.graph, inst.batch, lc, &lp, Exec::kParallel);
    EXPECT_EQ(a.total, b.total);
    EXPECT_TRUE(bitwise_equal(ls.grads, lp.grads));

    const Matrix fs = final_embeddings(inst.model, inst.graph, Exec::kSerial);
    const Matrix fp = final_embeddings(inst.model, inst.graph, Exec::kParallel);
    EXPECT_TRUE(bitwise_equal(fs, fp));
  }
}

}  // namespace
}  // namespace gacse
