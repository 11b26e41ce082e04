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
#include "gacse/trainer.hpp"

#include <omp.h>

#include <bit>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gacse/checkpoint.hpp"
#include "gacse/error.hpp"
#include "gacse/optimizer.hpp"
#include "gacse/sampling.hpp"

namespace gacse {

namespace {

using nlohmann::json;

// Append-only sink for report.jsonl; a no-op when no output directory is set.
class RunLog {
 public:
  explicit RunLog(const std::optional<std::filesystem::path>& dir) {
    if (!dir) return;
    std::error_code ec;
    std::filesystem::create_directories(*dir, ec);
    if (ec) throw Error(ErrorCategory::kIo, "cannot create " + dir->string() + ": " + ec.message());
    out_.open(*dir / "report.jsonl", std::ios::trunc);
    if (!out_) throw Error(ErrorCategory::kIo, "cannot write " + (*dir / "report.jsonl").string());
  }

  void write(const json& line) {
    if (!out_.is_open()) return;
    out_ << line.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

json loss_json(std::size_t epoch, std::size_t step, const LossBreakdown& l) {
  return {{"type", "loss"}, {"epoch", epoch}, {"step", step},   {"bpr", l.bpr},
          {"similarity", l.similarity},       {"l2", l.l2},     {"total", l.total}};
}

json eval_json(std::size_t epoch, const char* split, const MetricsReport& m) {
  return {{"type", "eval"}, {"epoch", epoch},   {"split", split},
          {"k", m.k},       {"recall", m.recall}, {"ndcg", m.ndcg},
          {"users", m.num_users_evaluated}};
}

void write_metrics_csv(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
  out << "epoch,steps,bpr,similarity,l2,total,val_recall,val_ndcg\n";
  // Epoch 0 has no loss row; later epochs carry metrics only when evaluated.
  std::size_t e = 0;
  for (const auto& ev : report.evaluations) {
    while (e < report.epochs.size() && report.epochs[e].epoch < ev.epoch) {
      const auto& r = report.epochs[e++];
      out << fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},,\n", r.epoch, r.steps, r.mean.bpr,
                         r.mean.similarity, r.mean.l2, r.mean.total);
    }
    if (e < report.epochs.size() && report.epochs[e].epoch == ev.epoch) {
      const auto& r = report.epochs[e++];
      out << fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},", r.epoch, r.steps, r.mean.bpr,
                         r.mean.similarity, r.mean.l2, r.mean.total);
    } else {
      out << fmt::format("{},0,,,,,", ev.epoch);
    }
    out << fmt::format("{:.10g},{:.10g}\n", ev.metrics.recall, ev.metrics.ndcg);
  }
  for (; e < report.epochs.size(); ++e) {
    const auto& r = report.epochs[e];
    out << fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},,\n", r.epoch, r.steps, r.mean.bpr,
                       r.mean.similarity, r.mean.l2, r.mean.total);
  }
}

void accumulate(LossBreakdown& sum, const LossBreakdown& step) {
  sum.bpr += step.bpr;
  sum.similarity += step.similarity;
  sum.l2 += step.l2;
  sum.total += step.total;
}

double delta_pct(double variant, double full) {
  if (full == 0) return variant == 0 ? 0.0 : std::copysign(INFINITY, variant);
  return (variant - full) / full * 100.0;
}

}  // namespace

Exec exec_for(const TrainConfig& config) {
  return config.threads == 1 ? Exec::kSerial : Exec::kParallel;
}

const char* stop_reason_name(StopReason reason) {
  return reason == StopReason::kEarlyStopping ? "early_stopping" : "max_epochs";
}

std::uint64_t checksum(const Tables& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  params.for_each([&](const char*, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(m.data()[i]);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    }
  });
  return h;
}

TrainResult train(const SplitDataset& dataset, const TrainConfig& config,
                  const TrainOptions& options) {
  require_valid(config);
  const InteractionGraph& graph = dataset.train;
  if (graph.num_edges() == 0) throw Error(ErrorCategory::kEmptyDataset, "training split has no edges");
  if (config.threads > 0) omp_set_num_threads(static_cast<int>(config.threads));
  const Exec exec = exec_for(config);

  std::optional<std::filesystem::path> run_dir;
  if (options.out_dir) run_dir = *options.out_dir / config.run_id;
  RunLog log(run_dir);

  Model model = init_model(config.dims, graph.num_users(), graph.num_items(), config.seed,
                           config.leaky_slope);
  AdamState adam = make_adam_state(
      model, AdamConfig{config.learning_rate, config.beta1, config.beta2, config.epsilon,
                        config.sparse_adam});
  BatchSampler sampler(graph,
                       SamplerConfig{config.batch_size, config.fan_in, config.warmup_cap,
                                     config.num_pos, config.num_neg, !config.no_similarity,
                                     config.max_retries},
                       config.seed);
  const LossConfig loss_cfg = loss_config(config);
  GradientSet grads = GradientSet::zeros_like(model);
  const std::size_t steps_per_epoch = (graph.num_edges() + config.batch_size - 1) / config.batch_size;
  const EvalOptions eval_options{config.k, false, exec};

  TrainResult result{TrainReport{}, model, model};
  TrainReport& report = result.report;
  report.seed = config.seed;
  report.initial_checksum = checksum(model.params);

  std::size_t evals_since_best = 0;
  auto checkpoint_path = [&](const std::string& name) { return *run_dir / name; };
  auto run_eval = [&](std::size_t epoch) {
    const MetricsReport metrics = evaluate(model, dataset, EvalSplit::kValidation, eval_options);
    report.evaluations.push_back({epoch, metrics});
    log.write(eval_json(epoch, "validation", metrics));
    if (run_dir && config.save_epoch_checkpoints) {
      save_checkpoint(checkpoint_path(fmt::format("ckpt_{}.bin", epoch)), model, &adam);
    }
    // Ties keep the earlier epoch.
    if (report.evaluations.size() == 1 || metrics.recall > report.best.recall) {
      report.best = metrics;
      report.best_epoch = epoch;
      result.best_model = model;
      evals_since_best = 0;
      if (run_dir) {
        report.best_checkpoint = checkpoint_path("best.bin");
        save_checkpoint(*report.best_checkpoint, model, &adam);
      }
    } else {
      ++evals_since_best;
    }
  };

  run_eval(0);
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    LossBreakdown sum;
    for (std::size_t step = 1; step <= steps_per_epoch; ++step) {
      const MiniBatch batch = sampler.next();
      grads.reset();
      const LossBreakdown loss = total_loss(model, graph, batch, loss_cfg, &grads, exec);
      try {
        if (!std::isfinite(loss.total)) {
          throw Error(ErrorCategory::kNumeric,
                      fmt::format("non-finite loss at epoch {} step {}", epoch, step));
        }
        adam_step(model, grads, adam);
      } catch (const Error& e) {
        // The model is still the last finite state: neither branch mutated it.
        if (e.category() == ErrorCategory::kNumeric && run_dir) {
          save_checkpoint(checkpoint_path("last_good.bin"), model, &adam);
        }
        throw;
      }
      accumulate(sum, loss);
      if (options.on_step) options.on_step(epoch, step, loss);
      if (config.log_every > 0 && step % config.log_every == 0) log.write(loss_json(epoch, step, loss));
    }
    const Real n = static_cast<Real>(steps_per_epoch);
    EpochRecord record{epoch, steps_per_epoch,
                       combine(sum.bpr / n, sum.similarity / n, sum.l2 / n, config.lambda1,
                               config.lambda2)};
    record.mean.total = sum.total / n;
    report.epochs.push_back(record);
    log.write(loss_json(epoch, steps_per_epoch, record.mean));
    if (options.on_epoch) options.on_epoch(record, model);

    if (epoch % config.eval_every == 0 || epoch == config.max_epochs) {
      run_eval(epoch);
      if (evals_since_best >= config.patience) {
        report.stop_reason = StopReason::kEarlyStopping;
        break;
      }
    }
  }

  result.final_model = std::move(model);
  log.write({{"type", "summary"},
             {"best_epoch", report.best_epoch},
             {"best_recall", report.best.recall},
             {"best_ndcg", report.best.ndcg},
             {"k", report.best.k},
             {"stop_reason", stop_reason_name(report.stop_reason)},
             {"epochs_run", report.epochs.size()},
             {"seed", report.seed},
             {"initial_checksum", fmt::format("{:016x}", report.initial_checksum)},
             {"best_checkpoint",
              report.best_checkpoint ? json(report.best_checkpoint->string()) : json(nullptr)}});
  if (run_dir) write_metrics_csv(*run_dir / "metrics.csv", report);
  return result;
}

AblationReport run_ablation(const SplitDataset& dataset, const TrainConfig& config,
                            const TrainOptions& options) {
  AblationReport out;
  out.seed = config.seed;
  for (const Ablation a : {Ablation::kNone, Ablation::kNoSimilarity, Ablation::kNoAdaptiveMargin}) {
    TrainConfig variant = config;
    apply_ablation(variant, a);
    variant.run_id = config.run_id + "-" + ablation_name(a);
    AblationRow row;
    row.ablation = a;
    row.result = train(dataset, variant, options);
    row.test = evaluate(row.result.best_model, dataset, EvalSplit::kTest,
                        EvalOptions{config.k, config.exclude_validation, exec_for(config)});
    out.rows.push_back(std::move(row));
  }
  const AblationRow& full = out.rows.front();
  out.identical_initial_parameters = true;
  for (auto& row : out.rows) {
    row.recall_delta_pct = delta_pct(row.test.recall, full.test.recall);
    row.ndcg_delta_pct = delta_pct(row.test.ndcg, full.test.ndcg);
    out.identical_initial_parameters &=
        row.result.report.initial_checksum == full.result.report.initial_checksum;
  }
  return out;
}

std::string format_ablation_table(const AblationReport& report) {
  const std::size_t k = report.rows.empty() ? 20 : report.rows.front().test.k;
  std::string out = fmt::format("{:<10} {:<22} {:<22}\n", "Variant", fmt::format("Recall@{}", k),
                                fmt::format("NDCG@{}", k));
  for (const auto& row : report.rows) {
    std::string recall = fmt::format("{:.4f}", row.test.recall);
    std::string ndcg = fmt::format("{:.4f}", row.test.ndcg);
    if (row.ablation != Ablation::kNone) {
      recall += fmt::format(" ({:+.2f}%)", row.recall_delta_pct);
      ndcg += fmt::format(" ({:+.2f}%)", row.ndcg_delta_pct);
    }
    out += fmt::format("{:<10} {:<22} {:<22}\n", ablation_name(row.ablation), recall, ndcg);
  }
  out += fmt::format("seed {}; identical initial parameters: {}\n", report.seed,
                     report.identical_initial_parameters ? "yes" : "no");
  return out;
}

std::string ablation_csv(const AblationReport& report) {
  std::string out = "variant,recall,ndcg,recall_delta_pct,ndcg_delta_pct,best_epoch,seed,initial_checksum\n";
  for (const auto& row : report.rows) {
    out += fmt::format("{},{:.10g},{:.10g},{:.6f},{:.6f},{},{},{:016x}\n", ablation_name(row.ablation),
                       row.test.recall, row.test.ndcg, row.recall_delta_pct, row.ndcg_delta_pct,
                       row.result.report.best_epoch, report.seed,
                       row.result.report.initial_checksum);
  }
  return out;
}

}  // namespace gacse
