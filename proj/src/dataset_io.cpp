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
#include <algorithm>
#include <fstream>
#include <sstream>

#include "gacse/error.hpp"
#include "gacse/graph.hpp"

namespace gacse {

namespace {

void write_adjacency(const std::filesystem::path& path,
                     const std::vector<std::vector<std::uint32_t>>& lists) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
  for (std::size_t u = 0; u < lists.size(); ++u) {
    if (lists[u].empty()) continue;
    out << u;
    for (auto item : lists[u]) out << ' ' << item;
    out << '\n';
  }
}

std::vector<Interaction> read_adjacency(const std::filesystem::path& path,
                                        std::size_t num_users, std::size_t num_items) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open " + path.string());
  std::vector<Interaction> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    long long user = -1;
    if (!(tokens >> user)) continue;
    long long item = 0;
    while (tokens >> item) {
      if (user < 0 || item < 0 || static_cast<std::size_t>(user) >= num_users ||
          static_cast<std::size_t>(item) >= num_items) {
        throw Error(ErrorCategory::kParse, path.string() + ": line " + std::to_string(line_no) +
                                               ": index outside the id map");
      }
      pairs.push_back({static_cast<std::uint32_t>(user), static_cast<std::uint32_t>(item)});
    }
    if (!tokens.eof()) {
      throw Error(ErrorCategory::kParse,
                  path.string() + ": line " + std::to_string(line_no) + ": non-numeric token");
    }
  }
  return pairs;
}

}  // namespace

void write_dataset(const SplitDataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::kIo, "cannot create " + dir.string() + ": " + ec.message());

  const std::size_t n = dataset.train.num_users();
  std::vector<std::vector<std::uint32_t>> train(n);
  for (const Interaction& e : dataset.train.edges()) train[e.user].push_back(e.item);
  write_adjacency(dir / "train.txt", train);
  write_adjacency(dir / "valid.txt", group_by_user(dataset.validation, n));
  write_adjacency(dir / "test.txt", group_by_user(dataset.test, n));

  std::ofstream ids(dir / "id_map.txt", std::ios::binary | std::ios::trunc);
  if (!ids) throw Error(ErrorCategory::kIo, "cannot write id_map.txt");
  for (std::size_t u = 0; u < dataset.user_ids.size(); ++u) {
    ids << "user " << u << ' ' << dataset.user_ids[u] << '\n';
  }
  for (std::size_t i = 0; i < dataset.item_ids.size(); ++i) {
    ids << "item " << i << ' ' << dataset.item_ids[i] << '\n';
  }
}

SplitDataset read_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCategory::kIo, "dataset directory not found: " + dir.string());
  }
  SplitDataset out;
  std::ifstream ids(dir / "id_map.txt", std::ios::binary);
  if (!ids) throw Error(ErrorCategory::kIo, "cannot open " + (dir / "id_map.txt").string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ids, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream tokens(line);
    std::string side;
    std::size_t index = 0;
    if (!(tokens >> side >> index) || (side != "user" && side != "item")) {
      throw Error(ErrorCategory::kParse, "id_map.txt: line " + std::to_string(line_no));
    }
    std::string external;
    std::getline(tokens >> std::ws, external);
    auto& table = side == "user" ? out.user_ids : out.item_ids;
    if (index != table.size()) {
      throw Error(ErrorCategory::kParse,
                  "id_map.txt: line " + std::to_string(line_no) + ": indices must be dense");
    }
    table.push_back(external);
  }
  const std::size_t n = out.user_ids.size();
  const std::size_t m = out.item_ids.size();
  if (n == 0 || m == 0) throw Error(ErrorCategory::kEmptyDataset, "id map has no users or items");

  const auto train = read_adjacency(dir / "train.txt", n, m);
  if (train.empty()) throw Error(ErrorCategory::kEmptyDataset, "train.txt has no interactions");
  out.train = InteractionGraph(n, m, train);
  out.validation = read_adjacency(dir / "valid.txt", n, m);
  out.test = read_adjacency(dir / "test.txt", n, m);
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace gacse
