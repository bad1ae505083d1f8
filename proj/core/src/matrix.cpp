// Copyright 2026 The kdprobe Authors
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

#include "kdprobe/matrix.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "distance.hpp"
#include "kdprobe/error.hpp"

namespace kdprobe {

static_assert(std::endian::native == std::endian::little,
              "matrix files are written with native little-endian layout");

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim) : dim_(dim) {
  require(dim > 0, ErrorCode::kInvalidArgument, "matrix dim must be positive");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> data,
                                 std::vector<std::uint64_t> ids)
    : dim_(dim), data_(std::move(data)), ids_(std::move(ids)) {
  require(dim > 0, ErrorCode::kInvalidArgument, "matrix dim must be positive");
  require(data_.size() % dim == 0, ErrorCode::kInvalidArgument,
          "matrix data size is not a multiple of dim");
  require(ids_.empty() || ids_.size() == count(), ErrorCode::kInvalidArgument,
          "id table length does not match row count");
}

void EmbeddingMatrix::append(std::span<const float> values) {
  require(values.size() == dim_, ErrorCode::kInvalidArgument,
          "appended row has wrong dimension");
  require(ids_.empty(), ErrorCode::kInvalidArgument,
          "matrix has an id table; append with an id");
  data_.insert(data_.end(), values.begin(), values.end());
}

void EmbeddingMatrix::append(std::span<const float> values, std::uint64_t id) {
  require(values.size() == dim_, ErrorCode::kInvalidArgument,
          "appended row has wrong dimension");
  if (ids_.empty() && count() > 0) {
    ids_.resize(count());
    for (std::size_t i = 0; i < ids_.size(); ++i) ids_[i] = i;
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ids_.push_back(id);
}

void EmbeddingMatrix::reserve(std::size_t rows) { data_.reserve(rows * dim_); }

void EmbeddingMatrix::set_ids(std::vector<std::uint64_t> ids) {
  require(ids.empty() || ids.size() == count(), ErrorCode::kInvalidArgument,
          "id table length does not match row count");
  ids_ = std::move(ids);
}

void EmbeddingMatrix::normalize_rows() {
  for (std::size_t i = 0; i < count(); ++i) {
    auto r = mutable_row(i);
    const double n = std::sqrt(norm_squared(r));
    if (n == 0.0) {
      std::fill(r.begin(), r.end(), 0.0f);
      r[0] = 1.0f;
      continue;
    }
    for (auto& v : r) v = static_cast<float>(v / n);
  }
}

double EmbeddingMatrix::max_norm_deviation() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < count(); ++i) {
    worst = std::max(worst, std::abs(std::sqrt(norm_squared(row(i))) - 1.0));
  }
  return worst;
}

std::size_t EmbeddingMatrix::count_norm_violations(double tol) const {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < count(); ++i) {
    if (std::abs(std::sqrt(norm_squared(row(i))) - 1.0) > tol) ++bad;
  }
  return bad;
}

EmbeddingMatrix EmbeddingMatrix::slice(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= count(), ErrorCode::kInvalidArgument,
          "slice out of range");
  std::vector<float> data(data_.begin() + begin * dim_, data_.begin() + end * dim_);
  std::vector<std::uint64_t> ids;
  if (has_ids()) {
    ids.assign(ids_.begin() + begin, ids_.begin() + end);
  } else if (begin > 0) {
    ids.resize(end - begin);
    std::iota(ids.begin(), ids.end(), begin);
  }
  return EmbeddingMatrix(dim_, std::move(data), std::move(ids));
}

EmbeddingMatrix EmbeddingMatrix::select(std::span<const std::size_t> rows) const {
  std::vector<float> data;
  data.reserve(rows.size() * dim_);
  std::vector<std::uint64_t> ids;
  for (auto r : rows) {
    require(r < count(), ErrorCode::kInvalidArgument, "selected row out of range");
    auto v = row(r);
    data.insert(data.end(), v.begin(), v.end());
    ids.push_back(id(r));
  }
  // Keep the matrix id-free when the selection is the identity prefix.
  bool identity = true;
  for (std::size_t i = 0; i < ids.size() && identity; ++i) identity = ids[i] == i;
  if (identity) ids.clear();
  return EmbeddingMatrix(dim_, std::move(data), std::move(ids));
}

std::vector<double> row_norms_squared(const EmbeddingMatrix& m) {
  std::vector<double> out(m.count());
  for (std::size_t i = 0; i < m.count(); ++i) out[i] = norm_squared(m.row(i));
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  require(a.size() == b.size(), ErrorCode::kInvalidArgument, "dimension mismatch");
  return detail::dot_f32_f64(a.data(), b.data(), a.size());
}

double norm_squared(std::span<const float> a) {
  return detail::dot_f32_f64(a.data(), a.data(), a.size());
}

double distance_from_dot(double norm_a_sq, double norm_b_sq, double dot_ab) {
  return std::sqrt(detail::squared_distance(norm_a_sq, norm_b_sq, dot_ab));
}

namespace {

constexpr char kMagic[8] = {'L', 'M', 'D', '3', 'V', 'E', 'C', '1'};
constexpr std::size_t kHeaderBytes = 8 + 4 + 8;

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <typename T>
T get(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

std::uint32_t crc_of(const char* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(p), chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void write_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  require(m.dim() > 0, ErrorCode::kInvalidArgument, "cannot write a matrix with dim 0");
  require(m.dim() <= UINT32_MAX, ErrorCode::kInvalidArgument, "dim exceeds u32");
  std::string buf;
  const std::size_t payload_floats = m.data().size() * sizeof(float);
  buf.reserve(kHeaderBytes + payload_floats + 1 + m.ids().size() * 8 + 4);
  buf.append(kMagic, 8);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.dim()));
  put<std::uint64_t>(buf, static_cast<std::uint64_t>(m.count()));
  buf.append(reinterpret_cast<const char*>(m.data().data()), payload_floats);
  buf.push_back(m.has_ids() ? 1 : 0);
  if (m.has_ids()) {
    buf.append(reinterpret_cast<const char*>(m.ids().data()), m.ids().size() * 8);
  }
  put<std::uint32_t>(buf, crc_of(buf.data() + kHeaderBytes, buf.size() - kHeaderBytes));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

EmbeddingMatrix read_matrix(const std::filesystem::path& path,
                            MatrixReadDiagnostics* diagnostics) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingInput,
          "cannot open matrix file: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const std::string name = path.string();
  require(buf.size() >= kHeaderBytes && std::memcmp(buf.data(), kMagic, 8) == 0,
          ErrorCode::kCorruptData, "bad matrix header: " + name);
  const auto dim = get<std::uint32_t>(buf.data() + 8);
  const auto count = get<std::uint64_t>(buf.data() + 12);
  require(dim > 0, ErrorCode::kCorruptData, "matrix header has dim 0: " + name);
  require(count <= (buf.size() / 4) / dim, ErrorCode::kCorruptData,
          "truncated matrix payload: " + name);

  const std::size_t float_bytes = static_cast<std::size_t>(count) * dim * sizeof(float);
  const std::size_t available = buf.size() - kHeaderBytes;
  require(available >= float_bytes + 1 + 4, ErrorCode::kCorruptData,
          "truncated matrix payload: " + name);
  const char flag = buf[kHeaderBytes + float_bytes];
  require(flag == 0 || flag == 1, ErrorCode::kCorruptData, "bad id-table flag: " + name);
  const std::size_t id_bytes = flag ? static_cast<std::size_t>(count) * 8 : 0;
  const std::size_t expected = float_bytes + 1 + id_bytes + 4;
  require(available >= expected, ErrorCode::kCorruptData,
          "truncated matrix payload: " + name);
  require(available == expected, ErrorCode::kCorruptData,
          "trailing bytes after matrix payload: " + name);

  const std::uint32_t stored = get<std::uint32_t>(buf.data() + buf.size() - 4);
  require(stored == crc_of(buf.data() + kHeaderBytes, expected - 4),
          ErrorCode::kCorruptData, "matrix checksum mismatch: " + name);

  std::vector<float> data(static_cast<std::size_t>(count) * dim);
  std::memcpy(data.data(), buf.data() + kHeaderBytes, float_bytes);
  std::vector<std::uint64_t> ids;
  if (flag) {
    ids.resize(count);
    std::memcpy(ids.data(), buf.data() + kHeaderBytes + float_bytes + 1, id_bytes);
  }
  EmbeddingMatrix m(dim, std::move(data), std::move(ids));
  if (diagnostics) {
    diagnostics->norm_violations = m.count_norm_violations(1e-3);
    diagnostics->max_norm_deviation = m.max_norm_deviation();
  }
  return m;
}

}  // namespace kdprobe
