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

#include "gprs/tiled_matrix.hpp"

#include <algorithm>
#include <string>

#include "gprs/error.hpp"

namespace gprs {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::size_t TileSpec::valid_extent(std::size_t t) const noexcept {
  const std::size_t begin = tile_begin(t);
  if (begin >= n_total) return 0;
  return std::min(tile_size, n_total - begin);
}

TileSpec make_spec(std::size_t n_total, std::size_t tiles_per_dim) {
  if (n_total == 0) throw ConfigError("tile spec: matrix dimension must be positive");
  if (tiles_per_dim == 0) throw ConfigError("tile spec: tiles per dimension must be positive");
  if (tiles_per_dim > n_total) {
    throw ConfigError("tile spec: " + std::to_string(tiles_per_dim) +
                      " tiles per dimension exceed dimension " + std::to_string(n_total));
  }
  return TileSpec{n_total, tiles_per_dim, (n_total + tiles_per_dim - 1) / tiles_per_dim};
}

Tile::Tile(std::size_t rows, std::size_t cols, std::size_t padded_rows, std::size_t padded_cols)
    : rows_(rows),
      cols_(cols),
      padded_rows_(padded_rows),
      padded_cols_(padded_cols),
      data_(padded_rows * padded_cols, 0.0) {
  if (rows > padded_rows || cols > padded_cols)
    throw DimensionError("tile: valid block larger than storage");
}

void Tile::set_identity_padding() {
  for (std::size_t r = 0; r < padded_rows_; ++r) {
    for (std::size_t c = 0; c < padded_cols_; ++c) {
      if (r < rows_ && c < cols_) continue;
      (*this)(r, c) = (r == c) ? 1.0 : 0.0;
    }
  }
}

Tile make_tile(const TileSpec& row_spec, std::size_t i, const TileSpec& col_spec, std::size_t j) {
  if (i >= row_spec.tiles_per_dim || j >= col_spec.tiles_per_dim)
    throw DimensionError("tile index (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") out of range");
  return Tile(row_spec.valid_extent(i), col_spec.valid_extent(j), row_spec.tile_size,
              col_spec.tile_size);
}

Segment make_segment(const TileSpec& spec, std::size_t t) {
  if (t >= spec.tiles_per_dim) throw DimensionError("segment index out of range");
  return Segment(spec.valid_extent(t), spec.tile_size);
}

Matrix to_dense(const TiledSymmetricMatrix& m) {
  const TileSpec& s = m.spec;
  Matrix dense(s.n_total, s.n_total);
  for (std::size_t r = 0; r < s.n_total; ++r) {
    for (std::size_t c = 0; c <= r; ++c) {
      const Tile& t = m.tile(r / s.tile_size, c / s.tile_size);
      const double v = t(r % s.tile_size, c % s.tile_size);
      dense(r, c) = v;
      dense(c, r) = v;
    }
  }
  return dense;
}

Matrix to_dense_lower(const TiledSymmetricMatrix& m) {
  const TileSpec& s = m.spec;
  Matrix dense(s.n_total, s.n_total);
  for (std::size_t r = 0; r < s.n_total; ++r)
    for (std::size_t c = 0; c <= r; ++c)
      dense(r, c) = m.tile(r / s.tile_size, c / s.tile_size)(r % s.tile_size, c % s.tile_size);
  return dense;
}

Matrix to_dense(const TiledPanel& p) {
  Matrix dense(p.row_spec.n_total, p.col_spec.n_total);
  const std::size_t rs = p.row_spec.tile_size;
  const std::size_t cs = p.col_spec.tile_size;
  for (std::size_t r = 0; r < dense.rows(); ++r)
    for (std::size_t c = 0; c < dense.cols(); ++c)
      dense(r, c) = p.tile(r / rs, c / cs)(r % rs, c % cs);
  return dense;
}

TiledSymmetricMatrix tile_symmetric(const Matrix& dense, const TileSpec& spec) {
  if (dense.rows() != spec.n_total || dense.cols() != spec.n_total)
    throw DimensionError("tile_symmetric: matrix does not match tile spec");
  TiledSymmetricMatrix m{spec, {}};
  m.tiles.reserve(lower_tile_count(spec.tiles_per_dim));
  for (std::size_t i = 0; i < spec.tiles_per_dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      Tile t = make_tile(spec, i, spec, j);
      for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c)
          t(r, c) = dense(spec.tile_begin(i) + r, spec.tile_begin(j) + c);
      if (i == j) t.set_identity_padding();
      m.tiles.push_back(std::move(t));
    }
  }
  return m;
}

TiledPanel tile_panel(const Matrix& dense, const TileSpec& row_spec, const TileSpec& col_spec) {
  if (dense.rows() != row_spec.n_total || dense.cols() != col_spec.n_total)
    throw DimensionError("tile_panel: matrix does not match tile specs");
  TiledPanel p{row_spec, col_spec, {}};
  p.tiles.reserve(row_spec.tiles_per_dim * col_spec.tiles_per_dim);
  for (std::size_t i = 0; i < row_spec.tiles_per_dim; ++i) {
    for (std::size_t j = 0; j < col_spec.tiles_per_dim; ++j) {
      Tile t = make_tile(row_spec, i, col_spec, j);
      for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c)
          t(r, c) = dense(row_spec.tile_begin(i) + r, col_spec.tile_begin(j) + c);
      p.tiles.push_back(std::move(t));
    }
  }
  return p;
}

std::vector<double> gather_vector(const TiledVector& v) {
  std::vector<double> out;
  out.reserve(v.spec.n_total);
  for (const Segment& s : v.segments)
    out.insert(out.end(), s.values().begin(), s.values().end());
  out.resize(v.spec.n_total);
  return out;
}

TiledVector scatter_vector(std::span<const double> values, const TileSpec& spec) {
  if (values.size() != spec.n_total)
    throw DimensionError("scatter_vector: length " + std::to_string(values.size()) +
                         " does not match tile spec " + std::to_string(spec.n_total));
  TiledVector v{spec, {}};
  v.segments.reserve(spec.tiles_per_dim);
  for (std::size_t t = 0; t < spec.tiles_per_dim; ++t) {
    Segment s = make_segment(spec, t);
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(spec.tile_begin(t)), s.size(),
                s.data());
    v.segments.push_back(std::move(s));
  }
  return v;
}

}  // namespace gprs
