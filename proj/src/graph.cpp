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
#include "gacse/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "gacse/error.hpp"

namespace gacse {

namespace {

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    const std::size_t h = std::hash<std::string>{}(p.first);
    return h ^ (std::hash<std::string>{}(p.second) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};

std::string_view trim_cr(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t'; });
}

// Assigns dense ids in first-appearance order.
class IdTable {
 public:
  std::uint32_t intern(const std::string& key) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(key);
    return it->second;
  }
  std::size_t size() const { return names_.size(); }
  std::vector<std::string> release() { return std::move(names_); }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> names_;
};

}  // namespace

InteractionGraph::InteractionGraph(std::size_t num_users, std::size_t num_items,
                                   std::span<const Interaction> edges)
    : num_users_(num_users), num_items_(num_items) {
  const std::size_t n = num_users + num_items;
  std::vector<std::vector<NodeId>> adj(n);
  for (const Interaction& e : edges) {
    if (e.user >= num_users || e.item >= num_items) {
      throw Error(ErrorCategory::kInvariant, "edge index out of range");
    }
    adj[e.user].push_back(item_node(e.item));
    adj[item_node(e.item)].push_back(e.user);
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    auto& list = adj[v];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    offsets_[v + 1] = offsets_[v] + list.size();
  }
  neighbors_.reserve(offsets_[n]);
  for (const auto& list : adj) neighbors_.insert(neighbors_.end(), list.begin(), list.end());
}

bool InteractionGraph::has_edge(std::uint32_t user, std::uint32_t item) const {
  if (user >= num_users_ || item >= num_items_) return false;
  const auto items = neighbors(user);
  return std::binary_search(items.begin(), items.end(), item_node(item));
}

std::vector<Interaction> InteractionGraph::edges() const {
  std::vector<Interaction> out;
  out.reserve(num_edges());
  for (std::uint32_t u = 0; u < num_users_; ++u) {
    for (NodeId i : neighbors(u)) out.push_back({u, local_index(i)});
  }
  return out;
}

RawInteractions parse_interactions(const std::string& text, DatasetFormat format) {
  RawInteractions raw;
  std::unordered_set<std::pair<std::string, std::string>, PairHash> seen;
  auto add = [&](std::string user, std::string item) {
    auto key = std::make_pair(std::move(user), std::move(item));
    if (seen.insert(key).second) raw.pairs.push_back(std::move(key));
  };

  std::istringstream in(text);
  std::string buffer;
  std::size_t line_no = 0;
  while (std::getline(in, buffer)) {
    ++line_no;
    std::string_view line = trim_cr(buffer);
    if (blank(line)) continue;
    if (format == DatasetFormat::kTsv) {
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos || tab == 0) {
        throw Error(ErrorCategory::kParse,
                    "line " + std::to_string(line_no) + ": expected \"user<TAB>item\"");
      }
      const auto rest = line.substr(tab + 1);
      const auto item = rest.substr(0, rest.find('\t'));
      if (item.empty() || blank(item)) {
        throw Error(ErrorCategory::kParse,
                    "line " + std::to_string(line_no) + ": empty item field");
      }
      add(std::string(line.substr(0, tab)), std::string(item));
    } else {
      if (line.find('\t') != std::string_view::npos) {
        throw Error(ErrorCategory::kParse,
                    "line " + std::to_string(line_no) +
                        ": adjacency lists are space separated, found a tab");
      }
      std::istringstream tokens{std::string(line)};
      std::string user;
      std::string item;
      tokens >> user;
      while (tokens >> item) add(user, item);
    }
  }
  if (raw.pairs.empty()) throw Error(ErrorCategory::kEmptyDataset, "no interactions in input");
  return raw;
}

RawInteractions ingest(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open " + path.string());
  std::ostringstream content;
  content << in.rdbuf();
  try {
    return parse_interactions(content.str(), format);
  } catch (const Error& e) {
    throw Error(e.category(), path.string() + ": " + e.what());
  }
}

RawInteractions k_core_filter(const RawInteractions& raw, std::size_t min_degree) {
  IdTable users;
  IdTable items;
  std::vector<Interaction> dense;
  dense.reserve(raw.pairs.size());
  for (const auto& [u, i] : raw.pairs) dense.push_back({users.intern(u), items.intern(i)});

  const std::size_t n = users.size();
  const std::size_t m = items.size();
  std::vector<std::vector<std::size_t>> user_edges(n);
  std::vector<std::vector<std::size_t>> item_edges(m);
  for (std::size_t e = 0; e < dense.size(); ++e) {
    user_edges[dense[e].user].push_back(e);
    item_edges[dense[e].item].push_back(e);
  }
  std::vector<std::size_t> user_deg(n);
  std::vector<std::size_t> item_deg(m);
  for (std::size_t u = 0; u < n; ++u) user_deg[u] = user_edges[u].size();
  for (std::size_t i = 0; i < m; ++i) item_deg[i] = item_edges[i].size();

  std::vector<bool> edge_alive(dense.size(), true);
  std::vector<bool> user_gone(n, false);
  std::vector<bool> item_gone(m, false);
  // Queue entries: (is_user, index).
  std::deque<std::pair<bool, std::size_t>> queue;
  for (std::size_t u = 0; u < n; ++u) {
    if (user_deg[u] < min_degree) { user_gone[u] = true; queue.emplace_back(true, u); }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (item_deg[i] < min_degree) { item_gone[i] = true; queue.emplace_back(false, i); }
  }
  while (!queue.empty()) {
    const auto [is_user, idx] = queue.front();
    queue.pop_front();
    for (std::size_t e : is_user ? user_edges[idx] : item_edges[idx]) {
      if (!edge_alive[e]) continue;
      edge_alive[e] = false;
      if (is_user) {
        const auto i = dense[e].item;
        if (--item_deg[i] < min_degree && !item_gone[i]) {
          item_gone[i] = true;
          queue.emplace_back(false, i);
        }
      } else {
        const auto u = dense[e].user;
        if (--user_deg[u] < min_degree && !user_gone[u]) {
          user_gone[u] = true;
          queue.emplace_back(true, u);
        }
      }
    }
  }

  RawInteractions out;
  for (std::size_t e = 0; e < dense.size(); ++e) {
    if (edge_alive[e]) out.pairs.push_back(raw.pairs[e]);
  }
  if (out.pairs.empty()) {
    throw Error(ErrorCategory::kEmptyDataset,
                std::to_string(min_degree) + "-core filtering removed every interaction");
  }
  return out;
}

SplitDataset split(const RawInteractions& raw, double train_frac, double valid_frac,
                   std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0) || !(valid_frac >= 0.0 && valid_frac < 1.0)) {
    throw Error(ErrorCategory::kConfig, "train fraction must lie in (0, 1), validation in [0, 1)");
  }
  if (raw.pairs.empty()) throw Error(ErrorCategory::kEmptyDataset, "nothing to split");

  IdTable users;
  IdTable items;
  std::vector<std::vector<std::uint32_t>> per_user;
  for (const auto& [u, i] : raw.pairs) {
    const auto uid = users.intern(u);
    const auto iid = items.intern(i);
    if (uid == per_user.size()) per_user.emplace_back();
    per_user[uid].push_back(iid);
  }
  const std::size_t n = users.size();
  const std::size_t m = items.size();

  Rng rng(seed);
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  std::vector<std::size_t> user_train(n, 0);
  std::vector<std::size_t> item_train(m, 0);
  for (std::uint32_t u = 0; u < n; ++u) {
    auto& list = per_user[u];
    if (list.size() < 2) {
      throw Error(ErrorCategory::kInvariant,
                  "user " + users.release().at(u) + " has fewer than 2 interactions");
    }
    std::shuffle(list.begin(), list.end(), rng);
    const auto n_train = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(list.size()))));
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Interaction pair{u, list[k]};
      if (k < n_train) {
        train.push_back(pair);
        ++user_train[u];
        ++item_train[pair.item];
      } else {
        test.push_back(pair);
      }
    }
  }

  // Items whose every pair fell into test get one pair back.
  std::vector<Interaction> kept_test;
  kept_test.reserve(test.size());
  for (const Interaction& pair : test) {
    if (item_train[pair.item] == 0) {
      train.push_back(pair);
      ++user_train[pair.user];
      ++item_train[pair.item];
    } else {
      kept_test.push_back(pair);
    }
  }
  test = std::move(kept_test);

  const auto n_valid =
      static_cast<std::size_t>(std::floor(valid_frac * static_cast<double>(train.size())));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> to_valid(train.size(), false);
  std::size_t moved = 0;
  for (std::size_t idx : order) {
    if (moved == n_valid) break;
    const Interaction& pair = train[idx];
    if (user_train[pair.user] < 2 || item_train[pair.item] < 2) continue;
    to_valid[idx] = true;
    --user_train[pair.user];
    --item_train[pair.item];
    ++moved;
  }
  std::vector<Interaction> train_kept;
  std::vector<Interaction> validation;
  for (std::size_t idx = 0; idx < train.size(); ++idx) {
    (to_valid[idx] ? validation : train_kept).push_back(train[idx]);
  }
  std::sort(validation.begin(), validation.end());
  std::sort(test.begin(), test.end());

  SplitDataset out;
  out.train = InteractionGraph(n, m, train_kept);
  out.validation = std::move(validation);
  out.test = std::move(test);
  out.user_ids = users.release();
  out.item_ids = items.release();
  return out;
}

double density(const InteractionGraph& graph) {
  if (graph.num_users() == 0 || graph.num_items() == 0) {
    throw Error(ErrorCategory::kEmptyDataset, "density of a graph with no users or items");
  }
  return static_cast<double>(graph.num_edges()) /
         (static_cast<double>(graph.num_users()) * static_cast<double>(graph.num_items()));
}

GraphStats stats(const InteractionGraph& graph) {
  return {graph.num_users(), graph.num_items(), graph.num_edges(), density(graph)};
}

GraphStats stats(const RawInteractions& raw) {
  std::unordered_set<std::string> users;
  std::unordered_set<std::string> items;
  for (const auto& [u, i] : raw.pairs) {
    users.insert(u);
    items.insert(i);
  }
  GraphStats s{users.size(), items.size(), raw.pairs.size(), 0.0};
  if (s.num_users > 0 && s.num_items > 0) {
    s.density = static_cast<double>(s.num_interactions) /
                (static_cast<double>(s.num_users) * static_cast<double>(s.num_items));
  }
  return s;
}

std::vector<std::vector<std::uint32_t>> group_by_user(std::span<const Interaction> pairs,
                                                      std::size_t num_users) {
  std::vector<std::vector<std::uint32_t>> out(num_users);
  for (const Interaction& p : pairs) {
    if (p.user >= num_users) throw Error(ErrorCategory::kShapeMismatch, "user index out of range");
    out[p.user].push_back(p.item);
  }
  for (auto& items : out) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return out;
}

}  // namespace gacse
