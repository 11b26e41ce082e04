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
// Acceptance gate: one PASS/FAIL/SKIP line per criterion, nonzero exit when
// any criterion fails. Tolerances are fixed here, not tuned per run.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include <fmt/format.h>

#include "gacse/error.hpp"
#include "gacse/evaluation.hpp"
#include "gacse/objective.hpp"
#include "gacse/propagation.hpp"
#include "gacse/trainer.hpp"
#include "support.hpp"

namespace {

using namespace gacse;
namespace oracle = gacse::testing::oracle;
using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void skip(int id, const char* name, const std::string& detail) {
  std::printf("[SKIP] %d %s: %s\n", id, name, detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Tiny {
  InteractionGraph graph;
  Model model;
  MiniBatch batch;
};

// 5 users, 6 items, d = 4, 3 triples, fan-in 2, one positive and one negative per anchor.
Tiny gradient_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tiny t;
  t.graph = testing::random_graph(rng, 5, 6, 0.4);
  t.model = testing::random_model(Dims{4, 4, 4, 4}, 5, 6, seed, 0.6);
  SamplerConfig sc;
  sc.batch_size = 3;
  sc.fan_in = 2;
  sc.num_pos = sc.num_neg = 1;
  BatchSampler sampler(t.graph, sc, seed);
  t.batch = sampler.next();
  return t;
}

void criterion_gradients() {
  const auto start = Clock::now();
  bool ok = true;
  double worst = 0;
  std::size_t entries = 0;
  std::string where;
  // The margin is attached here: with it detached the analytic gradient is,
  // by construction, not the derivative of the reported loss.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (int variant = 0; variant < 3; ++variant) {
      LossConfig c;
      c.detach_margin = false;
      if (variant >= 1) {
        c.lambda1 = 0.5;
        c.lambda2 = 0.01;
      }
      if (variant == 2) c.no_adaptive_margin = true;
      Tiny t = gradient_fixture(seed);
      GradientSet g = GradientSet::zeros_like(t.model);
      total_loss(t.model, t.graph, t.batch, c, &g);
      const auto res = testing::gradient_check(
          t.model, g.grads, [&](const Model& m) { return total_loss(m, t.graph, t.batch, c).total; },
          1e-5, 1e-4, 1e-7);
      entries += res.entries;
      if (res.worst_rel > worst) {
        worst = res.worst_rel;
        where = res.worst;
      }
      ok = ok && res.ok;
    }
  }
  const double secs = seconds_since(start);
  report(1, "gradient correctness", ok && secs < 60,
         fmt::format("{} entries, worst relative error {:.2e} beyond abs 1e-7 (tol 1e-4){}, {:.2f}s",
                     entries, worst, where.empty() ? "" : " at " + where, secs));
}

void criterion_closed_forms() {
  Tiny t = gradient_fixture(7);
  t.model.params.set_zero();
  LossConfig c;
  c.no_adaptive_margin = true;
  const LossBreakdown l = total_loss(t.model, t.graph, t.batch, c);
  const double bpr_err = std::abs(l.bpr - std::log(2.0));
  const std::vector<SimilarityPairSet> one = {{0, {1}, {2}, false}};
  const double sim_err = std::abs(similarity_loss(t.model, one, {}) - 2 * std::log(2.0));
  report(2, "closed-form loss values", bpr_err <= 1e-9 && sim_err <= 1e-9,
         fmt::format("|bpr - ln2| = {:.1e}, |sim - 2 ln2| = {:.1e} (tol 1e-9)", bpr_err, sim_err));
}

void criterion_normalization() {
  std::size_t nodes = 0;
  double worst_sum = 0, worst_shift = 0;
  std::uint64_t seed = 0;
  while (nodes < 10000) {
    std::mt19937_64 rng(seed);
    const InteractionGraph g = testing::random_graph(rng, 30, 30, 0.2);
    const Model m = testing::random_model(Dims{4, 4, 4, 4}, 30, 30, seed, 2.0);
    SamplerConfig sc;
    sc.batch_size = 64;
    sc.fan_in = 1 + seed % 8;
    sc.similarity = false;
    BatchSampler sampler(g, sc, seed);
    const MiniBatch batch = sampler.next();
    const ForwardTrace trace = forward(m, plan_for_batch(g, batch));
    for (std::uint32_t t = 0; t < trace.plan.num_targets(); ++t, ++nodes) {
      const auto w = trace.attention_weights(t);
      double total = 0;
      for (Real x : w) total += x;
      worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    }
    ++seed;
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<Real> u(-20, 20);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<Real> s(1 + trial % 16);
    for (Real& x : s) x = u(rng);
    const Real c = u(rng) * 5;
    std::vector<Real> shifted = s;
    for (Real& x : shifted) x += c;
    const auto a = attention_normalize(s), b = attention_normalize(shifted);
    for (std::size_t k = 0; k < a.size(); ++k) worst_shift = std::max(worst_shift, std::abs(a[k] - b[k]));
  }
  report(3, "normalization invariants", worst_sum <= 1e-6 && worst_shift <= 1e-9,
         fmt::format("{} nodes, max |sum - 1| = {:.1e} (tol 1e-6), max shift change = {:.1e} (tol 1e-9)",
                     nodes, worst_sum, worst_shift));
}

double max_abs(std::span<const Real> a, const std::vector<Real>& b) {
  double w = 0;
  for (std::size_t k = 0; k < a.size(); ++k) w = std::max(w, std::abs(a[k] - b[k]));
  return w;
}

void criterion_oracles() {
  double warm = 0, att = 0, sim = 0, metrics = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(3, 8), dim(1, 5);
    const std::size_t users = size(rng), items = size(rng);
    const InteractionGraph g = testing::random_graph(rng, users, items, 0.35);
    const Model m = testing::random_model(Dims{dim(rng), dim(rng), dim(rng), dim(rng)}, users, items, seed, 0.8);
    SamplerConfig sc;
    sc.batch_size = 4;
    sc.fan_in = 1 + seed % 3;
    sc.num_pos = sc.num_neg = 2;
    BatchSampler sampler(g, sc, seed);
    MiniBatch batch;
    try {
      batch = sampler.next();
    } catch (const Error&) {
      batch = sampler.complete({{0, g.local_index(g.neighbors(0)[0]), g.local_index(g.neighbors(0)[0])}});
    }
    const ForwardTrace trace = forward(m, plan_for_batch(g, batch));
    for (std::size_t w = 0; w < trace.plan.num_warm(); ++w) {
      warm = std::max(warm, max_abs(row_span(trace.warmup.out, w), oracle::warmup(m, g, trace.plan.warm_nodes[w])));
    }
    for (const auto& s : batch.neighbor_samples) {
      att = std::max(att, max_abs(trace.e2(s.node), oracle::attention(m, g, s.node, s.neighbors).e2));
    }
    sim = std::max(sim, std::abs(similarity_loss(m, batch.user_sim, batch.item_sim) -
                                 oracle::similarity(m, batch.user_sim, batch.item_sim)));

    // Per-user metrics on the model's own scores.
    const Matrix fin = final_embeddings(m, g);
    auto held = group_by_user(g.edges(), users);
    std::vector<std::vector<std::uint32_t>> excl(users);
    for (std::size_t u = 0; u < users; ++u) {
      // Hold out every other positive; exclude the rest.
      std::vector<std::uint32_t> keep;
      for (std::size_t k = 0; k < held[u].size(); ++k) (k % 2 ? excl[u] : keep).push_back(held[u][k]);
      held[u] = keep;
    }
    const std::size_t k = 1 + seed % 5;
    for (std::uint32_t u = 0; u < users; ++u) {
      std::vector<Real> scores(items);
      for (std::size_t i = 0; i < items; ++i) scores[i] = fin.row(u).dot(fin.row(users + i));
      const auto expect = oracle::user_metrics(scores, excl[u], held[u], k);
      const auto ranked = rank_items(scores, excl[u]);
      const auto r = recall_at_k(ranked, held[u], k);
      const auto n = ndcg_at_k(ranked, held[u], k);
      if (r.has_value() != expect.defined) metrics = INFINITY;
      if (!expect.defined) continue;
      metrics = std::max({metrics, std::abs(*r - expect.recall), std::abs(*n - expect.ndcg)});
    }
  }
  const bool ok = warm <= 1e-10 && att <= 1e-10 && sim <= 1e-10 && metrics <= 1e-10;
  report(4, "oracle equivalence", ok,
         fmt::format("100 instances; max deviation warm-up {:.1e}, attention {:.1e}, similarity {:.1e}, "
                     "metrics {:.1e} (tol 1e-10)",
                     warm, att, sim, metrics));
}

TrainConfig synthetic_config(std::uint64_t seed) {
  TrainConfig c;
  c.dims = Dims{16, 16, 16, 16};
  c.max_epochs = 200;
  c.seed = seed;
  c.threads = 1;
  return c;
}

void criterion_overfit() {
  const std::uint64_t seed = 2020;
  const SplitDataset d = testing::block_dataset(seed);
  TrainConfig c = synthetic_config(seed);
  c.patience = c.max_epochs;  // the check is about capacity, not model selection
  double best = 0;
  std::size_t best_epoch = 0;
  double final_recall = 0;
  TrainOptions opt;
  const auto train_edges = d.train.edges();
  opt.on_epoch = [&](const EpochRecord& r, const Model& m) {
    final_recall = evaluate_unfiltered(m, d.train, train_edges, 20).recall;
    if (final_recall > best) {
      best = final_recall;
      best_epoch = r.epoch;
    }
  };
  const auto start = Clock::now();
  const TrainResult res = train(d, c, opt);
  const double secs = seconds_since(start);
  report(5, "overfit integration", best >= 0.9 && secs < 300,
         fmt::format("training Recall@20 max {:.4f} at epoch {}, final {:.4f} after {} epochs "
                     "(target >= 0.9), {:.1f}s single-threaded",
                     best, best_epoch, final_recall, res.report.epochs.size(), secs));
}

void criterion_ablation() {
  int full_wins = 0;
  bool trajectories_differ = true;
  bool sl_zero = true;
  std::string per_seed;
  for (std::uint64_t seed : {2020, 2021, 2022}) {
    const SplitDataset d = testing::block_dataset(seed);
    const TrainConfig c = synthetic_config(seed);
    const AblationReport r = run_ablation(d, c);
    const auto& full = r.rows[0].result.report;
    const auto& sl = r.rows[1].result.report;
    const auto& am = r.rows[2].result.report;
    bool differs = full.epochs.size() != am.epochs.size();
    for (std::size_t e = 0; !differs && e < full.epochs.size(); ++e) {
      differs = full.epochs[e].mean.total != am.epochs[e].mean.total;
    }
    trajectories_differ = trajectories_differ && differs;
    for (const auto& e : sl.epochs) sl_zero = sl_zero && e.mean.similarity == 0;
    const bool wins = full.best.recall >= sl.best.recall && full.best.recall >= am.best.recall;
    full_wins += wins ? 1 : 0;
    per_seed += fmt::format(" seed {}: full {:.4f} sl {:.4f} am {:.4f};", seed, full.best.recall,
                            sl.best.recall, am.best.recall);
  }
  // Step-level check of the no-similarity variant.
  {
    const SplitDataset d = testing::block_dataset(2020);
    TrainConfig c = synthetic_config(2020);
    apply_ablation(c, Ablation::kNoSimilarity);
    c.max_epochs = 20;
    TrainOptions opt;
    opt.on_step = [&](std::size_t, std::size_t, const LossBreakdown& l) {
      sl_zero = sl_zero && l.similarity == 0;
    };
    train(d, c, opt);
  }
  report(6, "ablation behavior", trajectories_differ && sl_zero && full_wins >= 2,
         fmt::format("am trajectory differs: {}; sl similarity identically 0: {}; full >= both "
                     "ablations in {}/3 seeds (need 2) -{}",
                     trajectories_differ ? "yes" : "no", sl_zero ? "yes" : "no", full_wins, per_seed));
}

void criterion_pipeline() {
  std::mt19937_64 rng(77);
  int core_ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::bernoulli_distribution coin(0.3);
    RawInteractions raw;
    for (int u = 0; u < 40; ++u) {
      for (int i = 0; i < 35; ++i) {
        if (coin(rng)) raw.pairs.emplace_back("u" + std::to_string(u), "i" + std::to_string(i));
      }
    }
    const auto expected = oracle::peel(raw.pairs, 10);
    try {
      const RawInteractions core = ten_core_filter(raw);
      const std::set<std::pair<std::string, std::string>> got(core.pairs.begin(), core.pairs.end());
      const bool fixpoint = ten_core_filter(core).pairs == core.pairs;
      core_ok += (got == expected && fixpoint) ? 1 : 0;
    } catch (const Error& e) {
      core_ok += (expected.empty() && e.category() == ErrorCategory::kEmptyDataset) ? 1 : 0;
    }
  }
  int split_ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RawInteractions raw = testing::block_interactions(50, 50, 5, 0.8, seed);
    const SplitDataset a = split(raw, 0.8, 0.1, seed), b = split(raw, 0.8, 0.1, seed);
    std::multiset<std::pair<std::string, std::string>> parts;
    auto add = [&](std::span<const Interaction> ps) {
      for (const auto& p : ps) parts.emplace(a.user_ids[p.user], a.item_ids[p.item]);
    };
    const auto train_edges = a.train.edges();
    add(train_edges);
    add(a.validation);
    add(a.test);
    const std::multiset<std::pair<std::string, std::string>> input(raw.pairs.begin(), raw.pairs.end());
    bool covered = true;
    for (NodeId x = 0; x < a.train.num_nodes(); ++x) covered = covered && a.train.degree(x) > 0;
    const bool same = b.train.edges() == train_edges && b.validation == a.validation && b.test == a.test;
    split_ok += (parts == input && covered && same) ? 1 : 0;
  }
  report(7, "pipeline properties", core_ok == 50 && split_ok == 20,
         fmt::format("10-core matches peeling oracle and is a fixpoint on {}/50 graphs; split "
                     "partition, coverage and determinism hold on {}/20 seeds",
                     core_ok, split_ok));
}

void criterion_reproduction() {
  const char* dir = std::getenv("GACSE_GOWALLA_DIR");
  if (dir == nullptr || !std::filesystem::exists(std::filesystem::path(dir) / "train.txt")) {
    skip(8, "dataset density", "GACSE_GOWALLA_DIR not set; density check runs when the dataset is present");
  } else {
    RawInteractions all = ingest(std::filesystem::path(dir) / "train.txt", DatasetFormat::kAdjacencyList);
    const auto test_file = std::filesystem::path(dir) / "test.txt";
    if (std::filesystem::exists(test_file)) {
      const RawInteractions t = ingest(test_file, DatasetFormat::kAdjacencyList);
      all.pairs.insert(all.pairs.end(), t.pairs.begin(), t.pairs.end());
    }
    const GraphStats s = stats(all);
    const double pct = 100.0 * s.density;
    report(8, "dataset density", std::abs(pct - 0.084) <= 0.005,
           fmt::format("{} users, {} items, {} interactions, density {:.4f}% (target 0.084 +- 0.005)",
                       s.num_users, s.num_items, s.num_interactions, pct));
  }
  skip(8, "full-scale Recall@20 reproduction",
       "multi-hour run excluded from CI; see docs/reproduction.md (target 0.1654 +- 10%)");
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_closed_forms();
  criterion_normalization();
  criterion_oracles();
  criterion_overfit();
  criterion_ablation();
  criterion_pipeline();
  criterion_reproduction();
  std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
