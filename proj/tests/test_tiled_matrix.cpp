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


#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gprs/error.hpp"
#include "gprs/tiled_matrix.hpp"

namespace gprs {
namespace {

Matrix random_symmetric(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c <= r; ++c) m(r, c) = m(c, r) = u(rng);
  return m;
}

TEST(TileSpec, CeilArithmetic) {
  EXPECT_EQ(make_spec(8192, 16).tile_size, 512u);
  EXPECT_EQ(make_spec(8, 1).tile_size, 8u);
  const TileSpec s = make_spec(10, 4);
  EXPECT_EQ(s.tile_size, 3u);
  EXPECT_EQ(s.padded_size(), 12u);
  EXPECT_EQ(s.valid_extent(0), 3u);
  EXPECT_EQ(s.valid_extent(3), 1u);
}

TEST(TileSpec, AllPaddingTileIsEmpty) {
  // ceil(9 / 4) = 3, so the fourth tile starts past the end.
  const TileSpec s = make_spec(9, 4);
  EXPECT_EQ(s.tile_size, 3u);
  EXPECT_EQ(s.valid_extent(3), 0u);
}

TEST(TileSpec, RejectsBadArguments) {
  EXPECT_THROW(make_spec(0, 1), ConfigError);
  EXPECT_THROW(make_spec(4, 0), ConfigError);
  EXPECT_THROW(make_spec(4, 5), ConfigError);
}

TEST(TiledSymmetric, SingleTileIdentityLayout) {
  Matrix a(2, 2);
  a(0, 0) = 4; a(0, 1) = 2; a(1, 0) = 2; a(1, 1) = 3;
  EXPECT_EQ(to_dense(tile_symmetric(a, make_spec(2, 1))), a);
}

TEST(TiledSymmetric, PaddedCaseDropsPadding) {
  std::mt19937_64 rng(3);
  const Matrix a = random_symmetric(10, rng);
  const auto t = tile_symmetric(a, make_spec(10, 4));
  EXPECT_EQ(t.tiles.size(), lower_tile_count(4));
  const Matrix back = to_dense(t);
  EXPECT_EQ(back.rows(), 10u);
  EXPECT_EQ(back, a);
  // Diagonal tile padding carries the identity pattern.
  const Tile& last = t.tile(3, 3);
  EXPECT_EQ(last(0, 0), a(9, 9));
  EXPECT_EQ(last(1, 1), 1.0);
  EXPECT_EQ(last(2, 2), 1.0);
  EXPECT_EQ(last(1, 0), 0.0);
  EXPECT_EQ(t.tile(3, 0)(1, 0), 0.0);
}

TEST(TiledSymmetric, RoundTripProperty) {
  std::mt19937_64 rng(11);
  for (std::size_t n = 1; n <= 64; ++n) {
    const Matrix a = random_symmetric(n, rng);
    for (std::size_t t = 1; t <= n; ++t) {
      const Matrix back = to_dense(tile_symmetric(a, make_spec(n, t)));
      ASSERT_EQ(back, a) << "n=" << n << " t=" << t;
      ASSERT_EQ(back, back.transposed());
    }
  }
}

TEST(TiledSymmetric, LowerOnlyReconstruction) {
  std::mt19937_64 rng(5);
  const Matrix a = random_symmetric(7, rng);
  const Matrix low = to_dense_lower(tile_symmetric(a, make_spec(7, 3)));
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 7; ++c) EXPECT_EQ(low(r, c), c <= r ? a(r, c) : 0.0);
}

TEST(TiledPanel, RoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t m : {1u, 5u, 13u}) {
    for (std::size_t n : {1u, 4u, 10u}) {
      Matrix a(m, n);
      for (double& x : a.data()) x = u(rng);
      for (std::size_t tm = 1; tm <= m; tm += 2) {
        for (std::size_t tn = 1; tn <= n; tn += 3) {
          const auto p = tile_panel(a, make_spec(m, tm), make_spec(n, tn));
          ASSERT_EQ(p.tiles.size(), tm * tn);
          ASSERT_EQ(to_dense(p), a);
        }
      }
    }
  }
}

TEST(TiledVector, GatherExamples) {
  TiledVector one{make_spec(3, 1), {Segment{1.0, 2.0, 3.0}}};
  EXPECT_EQ(gather_vector(one), (std::vector<double>{1, 2, 3}));

  TiledVector two{make_spec(3, 2), {Segment{1.0, 2.0}, Segment(1, 2)}};
  two.segments[1][0] = 3.0;
  EXPECT_EQ(gather_vector(two), (std::vector<double>{1, 2, 3}));
}

TEST(TiledVector, ScatterGatherProperty) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  for (std::size_t n = 1; n <= 64; ++n) {
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    for (std::size_t t = 1; t <= n; ++t) {
      const auto tv = scatter_vector(v, make_spec(n, t));
      ASSERT_EQ(tv.segments.size(), t);
      for (const auto& s : tv.segments) ASSERT_EQ(s.padded_size(), tv.spec.tile_size);
      ASSERT_EQ(gather_vector(tv), v);
    }
  }
  std::vector<double> big(8192);
  for (double& x : big) x = g(rng);
  EXPECT_EQ(gather_vector(scatter_vector(big, make_spec(8192, 16))), big);
}

TEST(Tile, PaddedShapeAndIdentityPadding) {
  Tile t(2, 2, 4, 4);
  EXPECT_EQ(t.ld(), 4u);
  t.set_identity_padding();
  EXPECT_EQ(t(0, 0), 0.0);
  EXPECT_EQ(t(2, 2), 1.0);
  EXPECT_EQ(t(3, 3), 1.0);
  EXPECT_EQ(t(3, 2), 0.0);
}

}  // namespace
}  // namespace gprs
