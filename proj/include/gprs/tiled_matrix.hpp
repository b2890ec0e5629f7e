/*
 * Copyright 2026 The gprs Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gprs {

/// Dense row-major matrix. Used at the boundaries of the tiled code
/// (assembly oracles, results handed back to callers).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Partition of one matrix dimension into `tiles_per_dim` tiles of uniform
/// `tile_size`. The last tile may extend past `n_total`; that region is padding.
struct TileSpec {
  std::size_t n_total = 0;
  std::size_t tiles_per_dim = 0;
  std::size_t tile_size = 0;

  std::size_t padded_size() const noexcept { return tile_size * tiles_per_dim; }
  std::size_t tile_begin(std::size_t t) const noexcept { return t * tile_size; }
  /// Number of non-padding rows in tile `t` (zero for an all-padding tile).
  std::size_t valid_extent(std::size_t t) const noexcept;

  friend bool operator==(const TileSpec&, const TileSpec&) = default;
};

/// Validates and builds a spec; tile_size = ceil(n_total / tiles_per_dim).
/// Throws ConfigError for zero sizes or tiles_per_dim > n_total.
TileSpec make_spec(std::size_t n_total, std::size_t tiles_per_dim);

/// A dense row-major tile. `rows()` x `cols()` is the valid block; storage is
/// `padded_rows()` x `padded_cols()`. Tile kernels only ever touch the valid
/// block, so whatever sits in the padding cannot leak into results.
class Tile {
 public:
  Tile() = default;
  Tile(std::size_t rows, std::size_t cols) : Tile(rows, cols, rows, cols) {}
  Tile(std::size_t rows, std::size_t cols, std::size_t padded_rows, std::size_t padded_cols);

  /// Zero tile with the same valid and storage shape as `other`.
  static Tile zeros_like(const Tile& other) {
    return Tile(other.rows_, other.cols_, other.padded_rows_, other.padded_cols_);
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t padded_rows() const noexcept { return padded_rows_; }
  std::size_t padded_cols() const noexcept { return padded_cols_; }
  /// Row stride of the storage.
  std::size_t ld() const noexcept { return padded_cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * padded_cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * padded_cols_ + c];
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<const double> storage() const noexcept { return data_; }
  std::span<double> storage() noexcept { return data_; }

  /// Writes the unit-diagonal pattern into the padding of a square tile:
  /// ones on padded diagonal positions, zeros elsewhere in the padding.
  void set_identity_padding();

  friend bool operator==(const Tile&, const Tile&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t padded_rows_ = 0;
  std::size_t padded_cols_ = 0;
  std::vector<double> data_;
};

/// A tile_size-length vector segment; the first `size()` entries are data.
class Segment {
 public:
  Segment() = default;
  explicit Segment(std::size_t size) : Segment(size, size) {}
  Segment(std::size_t size, std::size_t padded_size) : size_(size), data_(padded_size, 0.0) {}
  Segment(std::initializer_list<double> values) : size_(values.size()), data_(values) {}

  static Segment zeros_like(const Segment& other) { return Segment(other.size_, other.data_.size()); }

  std::size_t size() const noexcept { return size_; }
  std::size_t padded_size() const noexcept { return data_.size(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  /// Valid entries only.
  std::span<const double> values() const noexcept { return {data_.data(), size_}; }
  std::span<double> storage() noexcept { return data_; }

  friend bool operator==(const Segment&, const Segment&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<double> data_;
};

/// Empty tile shaped for block (i, j) of a row_spec x col_spec tiling.
Tile make_tile(const TileSpec& row_spec, std::size_t i, const TileSpec& col_spec, std::size_t j);
Segment make_segment(const TileSpec& spec, std::size_t t);

/// Index of lower-triangular tile (i, j), i >= j, in packed storage.
constexpr std::size_t lower_index(std::size_t i, std::size_t j) noexcept {
  return i * (i + 1) / 2 + j;
}
constexpr std::size_t lower_tile_count(std::size_t t) noexcept { return t * (t + 1) / 2; }

/// Symmetric matrix stored as its lower-triangular tiles (i >= j).
struct TiledSymmetricMatrix {
  TileSpec spec;
  std::vector<Tile> tiles;

  Tile& tile(std::size_t i, std::size_t j) { return tiles[lower_index(i, j)]; }
  const Tile& tile(std::size_t i, std::size_t j) const { return tiles[lower_index(i, j)]; }
};

/// Rectangular matrix as a full row_spec.tiles_per_dim x col_spec.tiles_per_dim grid.
struct TiledPanel {
  TileSpec row_spec;
  TileSpec col_spec;
  std::vector<Tile> tiles;

  Tile& tile(std::size_t i, std::size_t j) { return tiles[i * col_spec.tiles_per_dim + j]; }
  const Tile& tile(std::size_t i, std::size_t j) const {
    return tiles[i * col_spec.tiles_per_dim + j];
  }
};

struct TiledVector {
  TileSpec spec;
  std::vector<Segment> segments;
};

/// Full symmetric N x N matrix; element (r, c) with r < c is read from (c, r).
Matrix to_dense(const TiledSymmetricMatrix& m);
/// Lower triangle only, strict upper part zero (view of a Cholesky factor).
Matrix to_dense_lower(const TiledSymmetricMatrix& m);
Matrix to_dense(const TiledPanel& p);

/// Tiles the lower triangle of `dense`; diagonal-tile padding gets the unit pattern.
TiledSymmetricMatrix tile_symmetric(const Matrix& dense, const TileSpec& spec);
TiledPanel tile_panel(const Matrix& dense, const TileSpec& row_spec, const TileSpec& col_spec);

std::vector<double> gather_vector(const TiledVector& v);
TiledVector scatter_vector(std::span<const double> values, const TileSpec& spec);

}  // namespace gprs
