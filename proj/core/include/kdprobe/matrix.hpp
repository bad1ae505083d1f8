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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace kdprobe {

// Row-major store of d-dimensional float vectors. Rows are expected to be
// unit-norm (see max_norm_deviation) but construction does not enforce it so
// that files with drifted rows can still be inspected.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim);
  EmbeddingMatrix(std::size_t dim, std::vector<float> data,
                  std::vector<std::uint64_t> ids = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> mutable_row(std::size_t i) {
    return {data_.data() + i * dim_, dim_};
  }

  const std::vector<float>& data() const noexcept { return data_; }

  bool has_ids() const noexcept { return !ids_.empty(); }
  const std::vector<std::uint64_t>& ids() const noexcept { return ids_; }
  // External id of row i; the row index itself when no id table is attached.
  std::uint64_t id(std::size_t i) const { return ids_.empty() ? i : ids_[i]; }

  void append(std::span<const float> values);
  void append(std::span<const float> values, std::uint64_t id);
  void reserve(std::size_t rows);
  void set_ids(std::vector<std::uint64_t> ids);

  // Rescales every row to unit L2 norm. All-zero rows become e_0.
  void normalize_rows();
  double max_norm_deviation() const;
  std::size_t count_norm_violations(double tol) const;

  // Rows [begin, end) as a new matrix. Ids are carried over; a matrix without
  // explicit ids contributes its row indices so query identity survives.
  EmbeddingMatrix slice(std::size_t begin, std::size_t end) const;
  EmbeddingMatrix select(std::span<const std::size_t> rows) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::vector<std::uint64_t> ids_;
};

// Squared L2 norm of every row, accumulated in double.
std::vector<double> row_norms_squared(const EmbeddingMatrix& m);

// Dot product of two float vectors accumulated in double with a fixed
// eight-lane order; identical inputs always give identical bits.
double dot(std::span<const float> a, std::span<const float> b);
double norm_squared(std::span<const float> a);

// Euclidean distance from precomputed squared norms and their dot product,
// clamped at zero.
double distance_from_dot(double norm_a_sq, double norm_b_sq, double dot_ab);

// Binary matrix file, little-endian:
//   "LMD3VEC1" | u32 dim | u64 count | count*dim f32 | u8 has_ids |
//   [count u64 ids] | u32 CRC32 over everything after the header.
struct MatrixReadDiagnostics {
  std::size_t norm_violations = 0;  // rows with | |x| - 1 | > 1e-3
  double max_norm_deviation = 0.0;
};

void write_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_matrix(const std::filesystem::path& path,
                            MatrixReadDiagnostics* diagnostics = nullptr);

}  // namespace kdprobe
