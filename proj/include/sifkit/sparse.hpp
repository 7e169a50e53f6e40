// Copyright 2026 The sifkit Authors
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

#ifndef SIFKIT_SPARSE_HPP
#define SIFKIT_SPARSE_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sifkit/error.hpp"

namespace sifkit {

using Index = std::size_t;

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  bool operator==(const Triplet&) const = default;
};

/// Immutable compressed-row matrix. Entries are unique and sorted row-major;
/// explicit zeros are kept when produced by assembly.
class SparseMatrix {
 public:
  SparseMatrix() : row_ptr_(1, 0) {}
  SparseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  /// Duplicates are summed in their order of appearance in `entries`.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= rows || t.col >= cols)
        throw Error(ErrorKind::DimensionMismatch, "sparse entry (" + std::to_string(t.row) + "," +
                                                      std::to_string(t.col) + ") outside " +
                                                      std::to_string(rows) + "x" + std::to_string(cols));
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix out(rows, cols);
    for (const auto& t : entries) {
      if (!out.entries_.empty() && out.entries_.back().row == t.row && out.entries_.back().col == t.col)
        out.entries_.back().value += t.value;
      else
        out.entries_.push_back(t);
    }
    for (const auto& t : out.entries_) ++out.row_ptr_[t.row + 1];
    for (Index i = 0; i < rows; ++i) out.row_ptr_[i + 1] += out.row_ptr_[i];
    return out;
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return entries_.size(); }

  std::span<const Triplet> entries() const { return entries_; }
  std::span<const Triplet> row(Index i) const {
    return std::span<const Triplet>(entries_).subspan(row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]);
  }

  double at(Index i, Index j) const {
    auto r = row(i);
    auto it = std::lower_bound(r.begin(), r.end(), j, [](const Triplet& t, Index c) { return t.col < c; });
    return (it != r.end() && it->col == j) ? it->value : 0.0;
  }

  std::vector<double> multiply(std::span<const double> v) const {
    if (v.size() != cols_)
      throw Error(ErrorKind::DimensionMismatch, "vector of length " + std::to_string(v.size()) +
                                                    " applied to matrix with " + std::to_string(cols_) +
                                                    " columns");
    std::vector<double> out(rows_, 0.0);
    for (const auto& t : entries_) out[t.row] += t.value * v[t.col];
    return out;
  }

  std::vector<std::vector<double>> to_dense() const {
    std::vector<std::vector<double>> out(rows_, std::vector<double>(cols_, 0.0));
    for (const auto& t : entries_) out[t.row][t.col] = t.value;
    return out;
  }

  bool is_symmetric() const {
    if (rows_ != cols_) return false;
    for (const auto& t : entries_)
      if (at(t.col, t.row) != t.value) return false;
    return true;
  }

  bool operator==(const SparseMatrix&) const = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_;
  std::vector<Triplet> entries_;
};

class CoordinateBuilder {
 public:
  CoordinateBuilder(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  void add(Index i, Index j, double v) { entries_.push_back({i, j, v}); }
  SparseMatrix freeze() && { return SparseMatrix::from_triplets(rows_, cols_, std::move(entries_)); }

 private:
  Index rows_;
  Index cols_;
  std::vector<Triplet> entries_;
};

/// Accumulates one triangle of a symmetric matrix and mirrors it on freeze, so
/// the result equals its transpose bit for bit.
class SymmetricBuilder {
 public:
  explicit SymmetricBuilder(Index n) : n_(n) {}

  void add(Index i, Index j, double v) {
    if (i < j) std::swap(i, j);
    lower_.push_back({i, j, v});
  }

  void add_matrix(const SparseMatrix& m, double scale = 1.0) {
    for (const auto& t : m.entries())
      if (t.row >= t.col) add(t.row, t.col, scale * t.value);
  }

  SparseMatrix freeze() && {
    SparseMatrix lower = SparseMatrix::from_triplets(n_, n_, std::move(lower_));
    std::vector<Triplet> full;
    full.reserve(2 * lower.nnz());
    for (const auto& t : lower.entries()) {
      full.push_back(t);
      if (t.row != t.col) full.push_back({t.col, t.row, t.value});
    }
    return SparseMatrix::from_triplets(n_, n_, std::move(full));
  }

 private:
  Index n_;
  std::vector<Triplet> lower_;
};

}  // namespace sifkit

#endif  // SIFKIT_SPARSE_HPP
