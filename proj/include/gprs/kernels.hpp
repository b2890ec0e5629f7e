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

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gprs/tiled_matrix.hpp"

namespace gprs {

/// Trainable parameters of the squared exponential kernel.
class Hyperparameters {
 public:
  /// Throws ConfigError unless length_scale > 0, signal_variance > 0 and
  /// noise_variance >= 0 (all finite).
  Hyperparameters(double length_scale, double signal_variance, double noise_variance);

  double length_scale() const noexcept { return length_scale_; }
  double signal_variance() const noexcept { return signal_variance_; }
  double noise_variance() const noexcept { return noise_variance_; }

  std::array<double, 3> as_array() const noexcept {
    return {length_scale_, signal_variance_, noise_variance_};
  }

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;

 private:
  double length_scale_;
  double signal_variance_;
  double noise_variance_;
};

/// Selector for kernel derivatives, ordered like Hyperparameters::as_array().
enum class Hyperparameter { length_scale = 0, signal_variance = 1, noise_variance = 2 };

/// Feature matrix Z (one sample per row) and observations y.
struct Dataset {
  Matrix features;
  std::vector<double> targets;

  Dataset() = default;
  /// Throws DimensionError if the row count differs from targets.size() or D == 0.
  Dataset(Matrix features, std::vector<double> targets);

  std::size_t n() const noexcept { return features.rows(); }
  std::size_t d() const noexcept { return features.cols(); }
  std::span<const double> sample(std::size_t i) const noexcept { return features.row(i); }
};

/// Whether the test prior covariance carries the noise term on its diagonal.
/// `excluded` gives the variance of the latent function.
enum class PriorNoise { excluded, included };

/// Squared distance, accumulated in ascending feature order.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// nu * exp(-|a - b|^2 / (2 l^2)) + [same_index] * sigma^2
double se_kernel(std::span<const double> a, std::span<const double> b, const Hyperparameters& theta,
                 bool same_index);

/// Covariance tile (tile_i, tile_j), tile_i >= tile_j, of the training set.
/// Padding of diagonal tiles carries the unit pattern, otherwise zero.
Tile assemble_cov_tile(const Dataset& train, const Hyperparameters& theta, std::size_t tile_i,
                       std::size_t tile_j, const TileSpec& spec);

/// Cross-covariance tile between test rows and training columns; never adds noise.
Tile assemble_cross_tile(const Dataset& test, const Dataset& train, const Hyperparameters& theta,
                         std::size_t tile_i, std::size_t tile_j, const TileSpec& test_spec,
                         const TileSpec& train_spec);

/// Prior covariance tile of the test set. Any tile_i, tile_j is accepted.
Tile assemble_prior_tile(const Dataset& test, const Hyperparameters& theta, std::size_t tile_i,
                         std::size_t tile_j, const TileSpec& spec,
                         PriorNoise noise = PriorNoise::excluded);

/// Diagonal of the test prior covariance for tile `tile_i`.
Segment assemble_prior_diagonal(const Dataset& test, const Hyperparameters& theta,
                                std::size_t tile_i, const TileSpec& spec,
                                PriorNoise noise = PriorNoise::excluded);

/// Element-wise derivative of the covariance tile with respect to `which`.
/// Padding is zero.
Tile grad_tile(const Dataset& train, const Hyperparameters& theta, Hyperparameter which,
               std::size_t tile_i, std::size_t tile_j, const TileSpec& spec);

/// All three derivative tiles in one pass over the sample pairs.
std::array<Tile, 3> grad_tiles(const Dataset& train, const Hyperparameters& theta,
                               std::size_t tile_i, std::size_t tile_j, const TileSpec& spec);

}  // namespace gprs
