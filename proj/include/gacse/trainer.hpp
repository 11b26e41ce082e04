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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gacse/evaluation.hpp"
#include "gacse/graph.hpp"
#include "gacse/model.hpp"
#include "gacse/objective.hpp"

namespace gacse {

enum class Ablation { kNone, kNoSimilarity, kNoAdaptiveMargin };

struct TrainConfig {
  Dims dims;
  std::size_t batch_size = 1024;
  std::size_t fan_in = 64;
  std::size_t warmup_cap = 0;
  std::size_t num_pos = 5;
  std::size_t num_neg = 5;
  Real lambda1 = 1e-4;
  Real lambda2 = 1e-5;
  Real learning_rate = 1e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
  std::size_t max_epochs = 400;
  std::size_t eval_every = 10;
  std::size_t patience = 5;
  std::size_t k = 20;
  std::uint64_t seed = 2020;
  bool no_similarity = false;
  bool no_adaptive_margin = false;
  bool detach_margin = true;
  Real leaky_slope = 0.2;
  L2Scope l2_scope = L2Scope::kAll;
  bool sparse_adam = true;
  std::size_t threads = 0;  // 0 = all available; 1 = deterministic serial kernels
  std::size_t max_retries = 100;
  bool exclude_validation = false;
  bool save_epoch_checkpoints = true;
  std::size_t log_every = 0;  // loss lines every N steps; 0 = once per epoch
  std::string run_id = "gacse";

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Every problem found, one message per bad field. Empty means valid.
std::vector<std::string> validate(const TrainConfig& config);
void require_valid(const TrainConfig& config);

// JSON with the field names above (dims flattened to d0..d3). Unknown fields
// and type errors are reported together as one kConfig error.
TrainConfig parse_config(const std::string& json_text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});
std::string config_to_json(const TrainConfig& config);

void apply_ablation(TrainConfig& config, Ablation ablation);
const char* ablation_name(Ablation ablation);  // "GACSE", "GACSE-sl", "GACSE-am"
Ablation parse_ablation(const std::string& flag);  // none | no-similarity | no-adaptive-margin

LossConfig loss_config(const TrainConfig& config);
Exec exec_for(const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  LossBreakdown mean;
};

struct EvalRecord {
  std::size_t epoch = 0;
  MetricsReport metrics;
};

enum class StopReason { kMaxEpochs, kEarlyStopping };
const char* stop_reason_name(StopReason reason);

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<EvalRecord> evaluations;
  std::size_t best_epoch = 0;
  MetricsReport best;
  StopReason stop_reason = StopReason::kMaxEpochs;
  std::uint64_t seed = 0;
  std::uint64_t initial_checksum = 0;  // FNV-1a over the initial parameters
  std::optional<std::filesystem::path> best_checkpoint;
};

struct TrainResult {
  TrainReport report;
  Model best_model;
  Model final_model;
};

struct TrainOptions {
  // When set, writes {out_dir}/{run_id}/ckpt_{epoch}.bin, best.bin,
  // report.jsonl and metrics.csv.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochRecord&, const Model&)> on_epoch;
  // Called after every optimizer step with the step's loss.
  std::function<void(std::size_t epoch, std::size_t step, const LossBreakdown&)> on_step;
};

// Throws kNumeric on a non-finite loss; checkpoints already written stay.
TrainResult train(const SplitDataset& dataset, const TrainConfig& config,
                  const TrainOptions& options = {});

std::uint64_t checksum(const Tables& params);

struct AblationRow {
  Ablation ablation = Ablation::kNone;
  TrainResult result;
  MetricsReport test;
  double recall_delta_pct = 0;  // (variant - full) / full * 100
  double ndcg_delta_pct = 0;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // full, GACSE-sl, GACSE-am
  std::uint64_t seed = 0;
  bool identical_initial_parameters = false;
};

// Runs the full model and both ablations from the same seed. Rows report the
// best validation checkpoint evaluated on the test split.
AblationReport run_ablation(const SplitDataset& dataset, const TrainConfig& config,
                            const TrainOptions& options = {});
std::string format_ablation_table(const AblationReport& report);
std::string ablation_csv(const AblationReport& report);

}  // namespace gacse
