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

#include "gprs/kernels.hpp"

#include <cmath>
#include <string>

#include "gprs/error.hpp"

namespace gprs {

Hyperparameters::Hyperparameters(double length_scale, double signal_variance,
                                 double noise_variance)
    : length_scale_(length_scale),
      signal_variance_(signal_variance),
      noise_variance_(noise_variance) {
  if (!(std::isfinite(length_scale) && length_scale > 0.0))
    throw ConfigError("length scale must be positive, got " + std::to_string(length_scale));
  if (!(std::isfinite(signal_variance) && signal_variance > 0.0))
    throw ConfigError("signal variance must be positive, got " + std::to_string(signal_variance));
  if (!(std::isfinite(noise_variance) && noise_variance >= 0.0))
    throw ConfigError("noise variance must be non-negative, got " +
                      std::to_string(noise_variance));
}

Dataset::Dataset(Matrix f, std::vector<double> y) : features(std::move(f)), targets(std::move(y)) {
  if (features.rows() != targets.size())
    throw DimensionError("dataset: " + std::to_string(features.rows()) + " feature rows but " +
                         std::to_string(targets.size()) + " observations");
  if (features.cols() == 0) throw DimensionError("dataset: feature dimension must be >= 1");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionError("kernel: feature dimensions differ (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    sum += diff * diff;
  }
  return sum;
}

double se_kernel(std::span<const double> a, std::span<const double> b, const Hyperparameters& theta,
                 bool same_index) {
  const double l = theta.length_scale();
  const double value =
      theta.signal_variance() * std::exp(-squared_distance(a, b) / (2.0 * l * l));
  return same_index ? value + theta.noise_variance() : value;
}

namespace {

void check_lower(std::size_t i, std::size_t j, const TileSpec& spec) {
  if (i >= spec.tiles_per_dim || j >= spec.tiles_per_dim)
    throw DimensionError("tile index out of range");
  if (i < j) throw DimensionError("covariance tiles are stored for tile_i >= tile_j only");
}

void check_spec(const Dataset& ds, const TileSpec& spec) {
  if (ds.n() != spec.n_total) throw DimensionError("dataset size does not match tile spec");
}

}  // namespace

Tile assemble_cov_tile(const Dataset& train, const Hyperparameters& theta, std::size_t tile_i,
                       std::size_t tile_j, const TileSpec& spec) {
  check_spec(train, spec);
  check_lower(tile_i, tile_j, spec);
  Tile t = make_tile(spec, tile_i, spec, tile_j);
  const std::size_t r0 = spec.tile_begin(tile_i);
  const std::size_t c0 = spec.tile_begin(tile_j);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      t(r, c) = se_kernel(train.sample(r0 + r), train.sample(c0 + c), theta, r0 + r == c0 + c);
  if (tile_i == tile_j) t.set_identity_padding();
  return t;
}

Tile assemble_cross_tile(const Dataset& test, const Dataset& train, const Hyperparameters& theta,
                         std::size_t tile_i, std::size_t tile_j, const TileSpec& test_spec,
                         const TileSpec& train_spec) {
  if (test.d() != train.d())
    throw DimensionError("cross covariance: test D=" + std::to_string(test.d()) +
                         " but train D=" + std::to_string(train.d()));
  check_spec(test, test_spec);
  check_spec(train, train_spec);
  Tile t = make_tile(test_spec, tile_i, train_spec, tile_j);
  const std::size_t r0 = test_spec.tile_begin(tile_i);
  const std::size_t c0 = train_spec.tile_begin(tile_j);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      t(r, c) = se_kernel(test.sample(r0 + r), train.sample(c0 + c), theta, false);
  return t;
}

Tile assemble_prior_tile(const Dataset& test, const Hyperparameters& theta, std::size_t tile_i,
                         std::size_t tile_j, const TileSpec& spec, PriorNoise noise) {
  check_spec(test, spec);
  Tile t = make_tile(spec, tile_i, spec, tile_j);
  const bool noisy = noise == PriorNoise::included;
  const std::size_t r0 = spec.tile_begin(tile_i);
  const std::size_t c0 = spec.tile_begin(tile_j);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      t(r, c) = se_kernel(test.sample(r0 + r), test.sample(c0 + c), theta,
                          noisy && r0 + r == c0 + c);
  return t;
}

Segment assemble_prior_diagonal(const Dataset& test, const Hyperparameters& theta,
                                std::size_t tile_i, const TileSpec& spec, PriorNoise noise) {
  check_spec(test, spec);
  Segment s = make_segment(spec, tile_i);
  const bool noisy = noise == PriorNoise::included;
  const std::size_t r0 = spec.tile_begin(tile_i);
  for (std::size_t r = 0; r < s.size(); ++r)
    s[r] = se_kernel(test.sample(r0 + r), test.sample(r0 + r), theta, noisy);
  return s;
}

std::array<Tile, 3> grad_tiles(const Dataset& train, const Hyperparameters& theta,
                               std::size_t tile_i, std::size_t tile_j, const TileSpec& spec) {
  check_spec(train, spec);
  check_lower(tile_i, tile_j, spec);
  std::array<Tile, 3> out{make_tile(spec, tile_i, spec, tile_j), make_tile(spec, tile_i, spec, tile_j),
                          make_tile(spec, tile_i, spec, tile_j)};
  const double l = theta.length_scale();
  const double nu = theta.signal_variance();
  const double inv_two_l2 = 1.0 / (2.0 * l * l);
  const double inv_l3 = 1.0 / (l * l * l);
  const std::size_t r0 = spec.tile_begin(tile_i);
  const std::size_t c0 = spec.tile_begin(tile_j);
  Tile& dl = out[0];
  for (std::size_t r = 0; r < dl.rows(); ++r) {
    for (std::size_t c = 0; c < dl.cols(); ++c) {
      const double dist2 = squared_distance(train.sample(r0 + r), train.sample(c0 + c));
      const double decay = std::exp(-dist2 * inv_two_l2);
      out[0](r, c) = nu * decay * dist2 * inv_l3;
      out[1](r, c) = decay;
      out[2](r, c) = (r0 + r == c0 + c) ? 1.0 : 0.0;
    }
  }
  return out;
}

Tile grad_tile(const Dataset& train, const Hyperparameters& theta, Hyperparameter which,
               std::size_t tile_i, std::size_t tile_j, const TileSpec& spec) {
  const auto index = static_cast<std::size_t>(which);
  if (index > 2) throw ConfigError("grad_tile: invalid hyperparameter selector");
  return std::move(grad_tiles(train, theta, tile_i, tile_j, spec)[index]);
}

}  // namespace gprs
