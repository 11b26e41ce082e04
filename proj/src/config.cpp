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
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gacse/error.hpp"
#include "gacse/trainer.hpp"

namespace gacse {

namespace {

using nlohmann::json;

const char* l2_scope_name(L2Scope scope) { return scope == L2Scope::kAll ? "all" : "batch"; }

class FieldReader {
 public:
  explicit FieldReader(const json& doc) : doc_(doc) {}

  void count(const char* key, std::size_t& out) {
    if (!take(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      errors_.push_back(std::string(key) + ": expected a non-negative integer");
      return;
    }
    out = v.get<std::size_t>();
  }
  void seed(const char* key, std::uint64_t& out) {
    if (!take(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      errors_.push_back(std::string(key) + ": expected a non-negative integer");
      return;
    }
    out = v.get<std::uint64_t>();
  }
  void real(const char* key, Real& out) {
    if (!take(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_number()) {
      errors_.push_back(std::string(key) + ": expected a number");
      return;
    }
    out = v.get<Real>();
  }
  void flag(const char* key, bool& out) {
    if (!take(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) {
      errors_.push_back(std::string(key) + ": expected true or false");
      return;
    }
    out = v.get<bool>();
  }
  void text(const char* key, std::string& out) {
    if (!take(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_string()) {
      errors_.push_back(std::string(key) + ": expected a string");
      return;
    }
    out = v.get<std::string>();
  }
  void scope(const char* key, L2Scope& out) {
    std::string s;
    if (!doc_.contains(key)) return;
    text(key, s);
    if (s == "all") out = L2Scope::kAll;
    else if (s == "batch") out = L2Scope::kBatch;
    else if (doc_.at(key).is_string()) errors_.push_back(std::string(key) + ": expected \"all\" or \"batch\"");
  }

  std::vector<std::string> finish() {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.contains(key)) errors_.push_back(key + ": unknown field");
    }
    return errors_;
  }

 private:
  bool take(const char* key) {
    seen_.insert(key);
    return doc_.contains(key);
  }

  const json& doc_;
  std::set<std::string> seen_;
  std::vector<std::string> errors_;
};

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& line : lines) out += "\n  " + line;
  return out;
}

}  // namespace

std::vector<std::string> validate(const TrainConfig& c) {
  std::vector<std::string> errors;
  auto positive = [&](const char* name, std::size_t v) {
    if (v == 0) errors.push_back(std::string(name) + ": must be >= 1");
  };
  positive("d0", c.dims.d0);
  positive("d1", c.dims.d1);
  positive("d2", c.dims.d2);
  positive("d3", c.dims.d3);
  positive("batch_size", c.batch_size);
  positive("fan_in", c.fan_in);
  positive("eval_every", c.eval_every);
  positive("patience", c.patience);
  positive("k", c.k);
  positive("max_retries", c.max_retries);
  if (!(c.lambda1 >= 0)) errors.push_back("lambda1: must be >= 0");
  if (!(c.lambda2 >= 0)) errors.push_back("lambda2: must be >= 0");
  if (!(c.learning_rate > 0)) errors.push_back("learning_rate: must be > 0");
  if (!(c.beta1 >= 0 && c.beta1 < 1)) errors.push_back("beta1: must lie in [0, 1)");
  if (!(c.beta2 >= 0 && c.beta2 < 1)) errors.push_back("beta2: must lie in [0, 1)");
  if (!(c.epsilon > 0)) errors.push_back("epsilon: must be > 0");
  if (!(c.leaky_slope >= 0 && c.leaky_slope < 1)) errors.push_back("leaky_slope: must lie in [0, 1)");
  if (c.run_id.empty() || c.run_id.find('/') != std::string::npos) {
    errors.push_back("run_id: must be a non-empty name without '/'");
  }
  return errors;
}

void require_valid(const TrainConfig& config) {
  const auto errors = validate(config);
  if (!errors.empty()) throw Error(ErrorCategory::kConfig, "invalid config:" + join(errors));
}

TrainConfig parse_config(const std::string& json_text, TrainConfig c) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCategory::kConfig, "config must be a JSON object");

  FieldReader r(doc);
  r.count("d0", c.dims.d0);
  r.count("d1", c.dims.d1);
  r.count("d2", c.dims.d2);
  r.count("d3", c.dims.d3);
  r.count("batch_size", c.batch_size);
  r.count("fan_in", c.fan_in);
  r.count("warmup_cap", c.warmup_cap);
  r.count("num_pos", c.num_pos);
  r.count("num_neg", c.num_neg);
  r.real("lambda1", c.lambda1);
  r.real("lambda2", c.lambda2);
  r.real("learning_rate", c.learning_rate);
  r.real("beta1", c.beta1);
  r.real("beta2", c.beta2);
  r.real("epsilon", c.epsilon);
  r.count("max_epochs", c.max_epochs);
  r.count("eval_every", c.eval_every);
  r.count("patience", c.patience);
  r.count("k", c.k);
  r.seed("seed", c.seed);
  r.flag("no_similarity", c.no_similarity);
  r.flag("no_adaptive_margin", c.no_adaptive_margin);
  r.flag("detach_margin", c.detach_margin);
  r.real("leaky_slope", c.leaky_slope);
  r.scope("l2_scope", c.l2_scope);
  r.flag("sparse_adam", c.sparse_adam);
  r.count("threads", c.threads);
  r.count("max_retries", c.max_retries);
  r.flag("exclude_validation", c.exclude_validation);
  r.flag("save_epoch_checkpoints", c.save_epoch_checkpoints);
  r.count("log_every", c.log_every);
  r.text("run_id", c.run_id);

  auto errors = r.finish();
  for (auto& e : validate(c)) errors.push_back(std::move(e));
  if (!errors.empty()) throw Error(ErrorCategory::kConfig, "invalid config:" + join(errors));
  return c;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str(), std::move(base));
  } catch (const Error& e) {
    throw Error(e.category(), path.string() + ": " + e.what());
  }
}

std::string config_to_json(const TrainConfig& c) {
  json doc = {
      {"d0", c.dims.d0}, {"d1", c.dims.d1}, {"d2", c.dims.d2}, {"d3", c.dims.d3},
      {"batch_size", c.batch_size}, {"fan_in", c.fan_in}, {"warmup_cap", c.warmup_cap},
      {"num_pos", c.num_pos}, {"num_neg", c.num_neg}, {"lambda1", c.lambda1},
      {"lambda2", c.lambda2}, {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
      {"beta2", c.beta2}, {"epsilon", c.epsilon}, {"max_epochs", c.max_epochs},
      {"eval_every", c.eval_every}, {"patience", c.patience}, {"k", c.k}, {"seed", c.seed},
      {"no_similarity", c.no_similarity}, {"no_adaptive_margin", c.no_adaptive_margin},
      {"detach_margin", c.detach_margin}, {"leaky_slope", c.leaky_slope},
      {"l2_scope", l2_scope_name(c.l2_scope)}, {"sparse_adam", c.sparse_adam},
      {"threads", c.threads}, {"max_retries", c.max_retries},
      {"exclude_validation", c.exclude_validation},
      {"save_epoch_checkpoints", c.save_epoch_checkpoints}, {"log_every", c.log_every},
      {"run_id", c.run_id}};
  return doc.dump(2);
}

void apply_ablation(TrainConfig& config, Ablation ablation) {
  config.no_similarity = ablation == Ablation::kNoSimilarity;
  config.no_adaptive_margin = ablation == Ablation::kNoAdaptiveMargin;
}

const char* ablation_name(Ablation ablation) {
  switch (ablation) {
    case Ablation::kNone: return "GACSE";
    case Ablation::kNoSimilarity: return "GACSE-sl";
    case Ablation::kNoAdaptiveMargin: return "GACSE-am";
  }
  return "?";
}

Ablation parse_ablation(const std::string& flag) {
  if (flag == "none") return Ablation::kNone;
  if (flag == "no-similarity") return Ablation::kNoSimilarity;
  if (flag == "no-adaptive-margin") return Ablation::kNoAdaptiveMargin;
  throw Error(ErrorCategory::kUsage,
              "--ablation must be none, no-similarity or no-adaptive-margin, got " + flag);
}

LossConfig loss_config(const TrainConfig& c) {
  LossConfig out;
  out.lambda1 = c.lambda1;
  out.lambda2 = c.lambda2;
  out.no_similarity = c.no_similarity;
  out.no_adaptive_margin = c.no_adaptive_margin;
  out.detach_margin = c.detach_margin;
  out.l2_scope = c.l2_scope;
  return out;
}

}  // namespace gacse
