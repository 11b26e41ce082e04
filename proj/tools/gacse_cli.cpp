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
// Batch front end: prepare, train, evaluate, ablate and export-metrics.
// Every command resolves and validates its configuration before reading data.
// Failures print "error[<category>]: <message>" and exit with the category code.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "gacse/checkpoint.hpp"
#include "gacse/error.hpp"
#include "gacse/evaluation.hpp"
#include "gacse/graph.hpp"
#include "gacse/trainer.hpp"

namespace {

using namespace gacse;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Flags {
  std::string data;
  std::string format = "adjlist";
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::size_t> threads;
  std::string ablation = "none";
  std::string checkpoint;
  std::string split = "test";
  double train_frac = 0.8;
  double valid_frac = 0.1;
};

DatasetFormat parse_format(const std::string& flag) {
  if (flag == "tsv") return DatasetFormat::kTsv;
  if (flag == "adjlist") return DatasetFormat::kAdjacencyList;
  throw Error(ErrorCategory::kUsage, "--format must be tsv or adjlist, got '" + flag + "'");
}

// Precedence: flag > file > default.
TrainConfig resolve_config(const Flags& f) {
  TrainConfig c = f.config.empty() ? TrainConfig{} : load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.k) c.k = *f.k;
  if (f.threads) c.threads = *f.threads;
  apply_ablation(c, parse_ablation(f.ablation));
  require_valid(c);
  return c;
}

void require_dir(const std::string& dir, const char* flag) {
  if (dir.empty()) throw Error(ErrorCategory::kUsage, std::string(flag) + " is required");
  if (!fs::is_directory(dir)) throw Error(ErrorCategory::kIo, "directory not found: " + dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
}

ordered_json stats_json(const GraphStats& s) {
  return {{"users", s.num_users},
          {"items", s.num_items},
          {"interactions", s.num_interactions},
          {"density", s.density},
          {"density_pct", 100.0 * s.density}};
}

ordered_json metrics_json(const MetricsReport& m, const char* split) {
  return {{"split", split}, {"k", m.k}, {"recall", m.recall}, {"ndcg", m.ndcg},
          {"users", m.num_users_evaluated}};
}

int cmd_prepare(const Flags& f) {
  if (f.data.empty()) throw Error(ErrorCategory::kUsage, "--data is required");
  if (f.out.empty()) throw Error(ErrorCategory::kUsage, "--out is required");
  const DatasetFormat format = parse_format(f.format);
  const std::uint64_t seed = f.seed.value_or(TrainConfig{}.seed);

  const RawInteractions raw = ingest(f.data, format);
  const RawInteractions core = ten_core_filter(raw);
  const SplitDataset d = split(core, f.train_frac, f.valid_frac, seed);
  fs::create_directories(f.out);
  write_dataset(d, f.out);

  ordered_json stats = {{"seed", seed},
                        {"format", f.format},
                        {"min_degree", 10},
                        {"raw", stats_json(gacse::stats(raw))},
                        {"filtered", stats_json(gacse::stats(core))},
                        {"split",
                         {{"train", d.train.num_edges()},
                          {"validation", d.validation.size()},
                          {"test", d.test.size()}}}};
  write_text(fs::path(f.out) / "stats.json", stats.dump(2) + "\n");
  std::cout << stats.dump(2) << "\n";
  return 0;
}

int cmd_train(const Flags& f) {
  const TrainConfig c = resolve_config(f);
  require_dir(f.data, "--data");
  const SplitDataset d = read_dataset(f.data);
  const fs::path out = f.out.empty() ? fs::path("runs") : fs::path(f.out);
  fs::create_directories(out / c.run_id);
  write_text(out / c.run_id / "config.json", config_to_json(c) + "\n");
  TrainOptions opt;
  opt.out_dir = out;
  const TrainResult r = train(d, c, opt);
  ordered_json summary = metrics_json(r.report.best, "validation");
  summary["best_epoch"] = r.report.best_epoch;
  summary["stop_reason"] = stop_reason_name(r.report.stop_reason);
  summary["seed"] = c.seed;
  if (r.report.best_checkpoint) summary["checkpoint"] = r.report.best_checkpoint->string();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_evaluate(const Flags& f) {
  const TrainConfig c = resolve_config(f);
  if (f.checkpoint.empty()) throw Error(ErrorCategory::kUsage, "--checkpoint is required");
  if (f.split != "test" && f.split != "validation") {
    throw Error(ErrorCategory::kUsage, "--split must be test or validation");
  }
  require_dir(f.data, "--data");
  const SplitDataset d = read_dataset(f.data);
  const Checkpoint ck = load_checkpoint(f.checkpoint);
  if (ck.model.num_users != d.train.num_users() || ck.model.num_items != d.train.num_items()) {
    throw Error(ErrorCategory::kShapeMismatch,
                fmt::format("checkpoint has {} users x {} items, dataset has {} x {}",
                            ck.model.num_users, ck.model.num_items, d.train.num_users(),
                            d.train.num_items()));
  }
  const bool test = f.split == "test";
  const MetricsReport m =
      evaluate(ck.model, d, test ? EvalSplit::kTest : EvalSplit::kValidation,
               EvalOptions{c.k, c.exclude_validation, exec_for(c)});
  if (!f.out.empty()) {
    // Run-over-run history: one appended row per evaluation.
    fs::create_directories(f.out);
    const fs::path history = fs::path(f.out) / "evaluations.csv";
    const bool fresh = !fs::exists(history);
    std::ofstream out(history, std::ios::app);
    if (fresh) out << "checkpoint,split,k,recall,ndcg,users\n";
    out << fmt::format("{},{},{},{:.10f},{:.10f},{}\n", f.checkpoint, f.split, m.k, m.recall, m.ndcg,
                       m.num_users_evaluated);
    if (!out) throw Error(ErrorCategory::kIo, "cannot write " + history.string());
  }
  std::cout << metrics_json(m, test ? "test" : "validation").dump() << "\n";
  return 0;
}

int cmd_ablate(const Flags& f) {
  const TrainConfig c = resolve_config(f);
  require_dir(f.data, "--data");
  const SplitDataset d = read_dataset(f.data);
  const fs::path out = f.out.empty() ? fs::path("runs") : fs::path(f.out);
  fs::create_directories(out);
  TrainOptions opt;
  opt.out_dir = out;
  const AblationReport r = run_ablation(d, c, opt);
  const std::string table = format_ablation_table(r);
  write_text(out / "ablation.txt", table);
  write_text(out / "ablation.csv", ablation_csv(r));
  std::cout << table;
  return 0;
}

// Rewrites the evaluation records of a run's report.jsonl as CSV, plus an
// epoch-versus-metric TSV for plotting convergence curves.
int cmd_export(const Flags& f) {
  require_dir(f.out, "--out");
  const fs::path report = fs::path(f.out) / "report.jsonl";
  std::ifstream in(report);
  if (!in) throw Error(ErrorCategory::kIo, "cannot read " + report.string());
  std::ostringstream csv, tsv;
  csv << "epoch,split,k,recall,ndcg,users\n";
  tsv << "epoch\trecall\tndcg\n";
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCategory::kParse, fmt::format("{}:{}: not a JSON object", report.string(), lineno));
    }
    if (j.value("type", "") != "eval") continue;
    csv << fmt::format("{},{},{},{:.6f},{:.6f},{}\n", j.at("epoch").get<std::size_t>(),
                       j.at("split").get<std::string>(), j.at("k").get<std::size_t>(),
                       j.at("recall").get<double>(), j.at("ndcg").get<double>(),
                       j.at("users").get<std::size_t>());
    tsv << fmt::format("{}\t{:.6f}\t{:.6f}\n", j.at("epoch").get<std::size_t>(), j.at("recall").get<double>(),
                       j.at("ndcg").get<double>());
  }
  write_text(fs::path(f.out) / "eval_metrics.csv", csv.str());
  write_text(fs::path(f.out) / "convergence.tsv", tsv.str());
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GACSE recommender: prepare data, train, evaluate and run ablations"};
  app.require_subcommand(1);
  Flags f;

  auto* prepare = app.add_subcommand("prepare", "10-core filter and split a raw interaction file");
  prepare->add_option("--data", f.data, "raw interaction file")->required();
  prepare->add_option("--format", f.format, "input format")->check(CLI::IsMember({"tsv", "adjlist"}));
  prepare->add_option("--out", f.out, "output dataset directory")->required();
  prepare->add_option("--seed", f.seed, "split seed");
  prepare->add_option("--train-frac", f.train_frac, "training fraction");
  prepare->add_option("--valid-frac", f.valid_frac, "validation fraction");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--k", f.k, "ranking cutoff");
    cmd->add_option("--threads", f.threads, "worker threads; 1 forces deterministic serial kernels");
  };
  auto* train_cmd = app.add_subcommand("train", "train one model");
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a split");
  auto* ablate = app.add_subcommand("ablate", "train the full model and both ablations");
  for (auto* cmd : {train_cmd, eval_cmd, ablate}) {
    add_common(cmd);
    cmd->add_option("--data", f.data, "prepared dataset directory");
  }
  for (auto* cmd : {train_cmd, ablate}) cmd->add_option("--out", f.out, "output directory");
  train_cmd->add_option("--ablation", f.ablation, "model variant")
      ->check(CLI::IsMember({"none", "no-similarity", "no-adaptive-margin"}));
  eval_cmd->add_option("--out", f.out, "directory whose evaluations.csv gets one appended row");
  eval_cmd->add_option("--checkpoint", f.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--split", f.split, "split to score")->check(CLI::IsMember({"test", "validation"}));
  auto* export_cmd = app.add_subcommand("export-metrics", "write a run's evaluation history as CSV");
  export_cmd->add_option("--out", f.out, "run directory holding report.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error[usage]: %s\n", e.what());
    return exit_code(ErrorCategory::kUsage);
  }

  try {
    if (*prepare) return cmd_prepare(f);
    if (*train_cmd) return cmd_train(f);
    if (*eval_cmd) return cmd_evaluate(f);
    if (*ablate) return cmd_ablate(f);
    return cmd_export(f);
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", category_name(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error[io]: %s\n", e.what());
    return exit_code(ErrorCategory::kIo);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[invariant]: %s\n", e.what());
    return exit_code(ErrorCategory::kInvariant);
  }
}
