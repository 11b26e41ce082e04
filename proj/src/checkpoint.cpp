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
#include "gacse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "gacse/error.hpp"

namespace gacse {

namespace {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
  }

  void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), n); }
  void u8(std::uint8_t x) { bytes(&x, 1); }
  void u32(std::uint32_t x) {
    unsigned char b[4];
    for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(x >> (8 * k));
    bytes(b, 4);
  }
  void u64(std::uint64_t x) {
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(x >> (8 * k));
    bytes(b, 8);
  }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void table(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.size(); ++k) f64(m.data()[k]);
  }
  void counts(const std::vector<std::uint64_t>& xs) {
    u64(xs.size());
    for (auto x : xs) u64(x);
  }
  void finish() {
    out_.flush();
    if (!out_) throw Error(ErrorCategory::kIo, "write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw Error(ErrorCategory::kIo, "cannot open " + path.string());
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorCategory::kParse, path_.string() + ": truncated checkpoint");
    }
  }
  std::uint8_t u8() {
    std::uint8_t x = 0;
    bytes(&x, 1);
    return x;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t x = 0;
    for (int k = 0; k < 4; ++k) x |= static_cast<std::uint32_t>(b[k]) << (8 * k);
    return x;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t x = 0;
    for (int k = 0; k < 8; ++k) x |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return x;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void table(Matrix& m, const char* name, std::uint64_t rows, std::uint64_t cols) {
    const auto r = u64();
    const auto c = u64();
    if (r != rows || c != cols) {
      throw Error(ErrorCategory::kShapeMismatch,
                  path_.string() + ": table " + name + " is " + std::to_string(r) + "x" +
                      std::to_string(c) + ", header implies " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    }
    m.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = f64();
  }
  std::vector<std::uint64_t> counts(std::size_t expected) {
    const auto n = u64();
    if (n != expected) throw Error(ErrorCategory::kShapeMismatch, path_.string() + ": step table size");
    std::vector<std::uint64_t> xs(n);
    for (auto& x : xs) x = u64();
    return xs;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

// Expected (rows, cols) of every table, in file order.
std::vector<std::pair<std::uint64_t, std::uint64_t>> expected_shapes(const Dims& d, std::uint64_t n,
                                                                     std::uint64_t m) {
  return {{n + m, d.d0}, {n, d.d0}, {m, d.d0}, {d.d1, d.d0},
          {d.d3, d.d1}, {d.d3, d.d1}, {d.d2, 2 * d.d1}, {d.d2, 1}};
}

void read_tables(Reader& in, Tables& t, const Dims& d, std::uint64_t n, std::uint64_t m) {
  const auto shapes = expected_shapes(d, n, m);
  std::size_t k = 0;
  t.for_each([&](const char* name, Matrix& table) {
    in.table(table, name, shapes[k].first, shapes[k].second);
    ++k;
  });
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const AdamState* optimizer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  Writer out(path);
  out.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  out.u32(kCheckpointVersion);
  out.u32(optimizer ? 1u : 0u);
  out.u64(model.dims.d0);
  out.u64(model.dims.d1);
  out.u64(model.dims.d2);
  out.u64(model.dims.d3);
  out.u64(model.num_users);
  out.u64(model.num_items);
  out.u64(model.seed);
  out.f64(model.leaky_slope);
  model.params.for_each([&](const char*, const Matrix& m) { out.table(m); });
  if (optimizer) {
    const AdamConfig& c = optimizer->config;
    out.f64(c.learning_rate);
    out.f64(c.beta1);
    out.f64(c.beta2);
    out.f64(c.epsilon);
    out.u8(c.sparse ? 1 : 0);
    out.u64(optimizer->step);
    optimizer->m.for_each([&](const char*, const Matrix& m) { out.table(m); });
    optimizer->v.for_each([&](const char*, const Matrix& m) { out.table(m); });
    out.counts(optimizer->row_steps_embedding);
    out.counts(optimizer->row_steps_user_context);
    out.counts(optimizer->row_steps_item_context);
  }
  out.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader in(path);
  char magic[8];
  in.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCategory::kParse, path.string() + ": not a checkpoint file");
  }
  const auto version = in.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCategory::kParse,
                path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto flags = in.u32();
  Checkpoint ck;
  Model& model = ck.model;
  model.dims.d0 = in.u64();
  model.dims.d1 = in.u64();
  model.dims.d2 = in.u64();
  model.dims.d3 = in.u64();
  model.num_users = in.u64();
  model.num_items = in.u64();
  model.seed = in.u64();
  model.leaky_slope = in.f64();
  read_tables(in, model.params, model.dims, model.num_users, model.num_items);
  if (flags & 1u) {
    AdamState state;
    state.config.learning_rate = in.f64();
    state.config.beta1 = in.f64();
    state.config.beta2 = in.f64();
    state.config.epsilon = in.f64();
    state.config.sparse = in.u8() != 0;
    state.step = in.u64();
    read_tables(in, state.m, model.dims, model.num_users, model.num_items);
    read_tables(in, state.v, model.dims, model.num_users, model.num_items);
    state.row_steps_embedding = in.counts(model.num_nodes());
    state.row_steps_user_context = in.counts(model.num_users);
    state.row_steps_item_context = in.counts(model.num_items);
    ck.optimizer = std::move(state);
  }
  if (!in.at_end()) throw Error(ErrorCategory::kParse, path.string() + ": trailing bytes");
  return ck;
}

}  // namespace gacse
