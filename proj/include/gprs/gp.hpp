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
#include <optional>
#include <vector>

#include "gprs/kernels.hpp"
#include "gprs/task_runtime.hpp"
#include "gprs/tile_blas.hpp"
#include "gprs/tiled_matrix.hpp"

/// Exact Gaussian-process regression expressed as tiled task graphs.
///
/// The graph builders (`assemble_*`, `tiled_cholesky`, the substitutions)
/// return futures immediately. The pipeline functions (`predict*`, `nlml*`,
/// `optimize`) build one graph, submit it and block until it completes; they
/// must be called from outside task bodies.
///
/// Every tile is produced by exactly one task whose inputs are fixed by the
/// graph, so results do not depend on the number of workers.
namespace gprs::gp {

using runtime::Future;

/// Pool that tasks are submitted to and the tile kernels they call. Both must
/// outlive every graph built with the context.
struct Context {
  runtime::Runtime& runtime;
  const blas::Backend& blas;
};

/// Lower-triangular tiles (i >= j) as futures, packed like TiledSymmetricMatrix.
struct SymmetricTiles {
  TileSpec spec;
  std::vector<Future<Tile>> tiles;

  Future<Tile>& tile(std::size_t i, std::size_t j) { return tiles[lower_index(i, j)]; }
  const Future<Tile>& tile(std::size_t i, std::size_t j) const { return tiles[lower_index(i, j)]; }
};

struct PanelTiles {
  TileSpec row_spec;
  TileSpec col_spec;
  std::vector<Future<Tile>> tiles;

  Future<Tile>& tile(std::size_t i, std::size_t j) { return tiles[i * col_spec.tiles_per_dim + j]; }
  const Future<Tile>& tile(std::size_t i, std::size_t j) const {
    return tiles[i * col_spec.tiles_per_dim + j];
  }
};

struct VectorSegments {
  TileSpec spec;
  std::vector<Future<Segment>> segments;
};

// Conversions between resolved containers and futures.
SymmetricTiles make_ready(const TiledSymmetricMatrix& m);
PanelTiles make_ready(const TiledPanel& p);
VectorSegments make_ready(const TiledVector& v);
TiledSymmetricMatrix collect(const runtime::Runtime& rt, const SymmetricTiles& m);
TiledPanel collect(const runtime::Runtime& rt, const PanelTiles& p);
TiledVector collect(const runtime::Runtime& rt, const VectorSegments& v);

// ---- graph builders --------------------------------------------------------

/// One assembly task per lower tile of K.
SymmetricTiles assemble_covariance(Context ctx, const Dataset& train, const Hyperparameters& theta,
                                   const TileSpec& spec);
/// One assembly task per tile of K_{test,train}.
PanelTiles assemble_cross_covariance(Context ctx, const Dataset& test, const Dataset& train,
                                     const Hyperparameters& theta, const TileSpec& test_spec,
                                     const TileSpec& train_spec);
SymmetricTiles assemble_prior_covariance(Context ctx, const Dataset& test,
                                         const Hyperparameters& theta, const TileSpec& spec,
                                         PriorNoise noise);

/// Right-looking tiled Cholesky. For every k: POTRF on (k,k), TRSM on (i,k)
/// for i > k, SYRK on (i,i) and GEMM on (i,j) for i > j > k. Each step is one
/// task reading exactly the tiles it needs, so the graph has
/// T + T(T-1) + T(T-1)(T-2)/6 tasks. A failing POTRF surfaces as
/// FactorizationError carrying the diagonal tile index.
SymmetricTiles tiled_cholesky(Context ctx, SymmetricTiles k);

/// Solves L z = b.
VectorSegments forward_substitution(Context ctx, const SymmetricTiles& l, VectorSegments b);
/// Solves L^T a = b.
VectorSegments backward_substitution(Context ctx, const SymmetricTiles& l, VectorSegments b);

/// Given the cross-covariance panel C = K_{test,train} (test rows, train
/// columns) returns W = V^T with L V = C^T, i.e. W L^T = C. Then
/// C K^{-1} C^T = W W^T.
PanelTiles panel_forward_substitution(Context ctx, const SymmetricTiles& l, PanelTiles c);

// ---- pipelines -------------------------------------------------------------

struct Options {
  /// Tiles per dimension of the training side.
  std::size_t tiles_per_dim = 1;
  /// Tiles per dimension of the test side; 0 means min(tiles_per_dim, M).
  std::size_t test_tiles_per_dim = 0;
  PriorNoise prior_noise = PriorNoise::excluded;
};

struct CholeskyFactor {
  /// Lower-triangular factor; strict upper part of diagonal tiles is zero.
  TiledSymmetricMatrix factor;
  Hyperparameters theta_used;
};

struct PredictionResult {
  std::vector<double> mean;
  std::optional<std::vector<double>> variance;
  std::optional<Matrix> full_cov;
};

CholeskyFactor cholesky(Context ctx, const Dataset& train, const Hyperparameters& theta,
                        const Options& opts = {});

/// Posterior mean K_{test,train} K^{-1} y.
PredictionResult predict(Context ctx, const Dataset& train, const Dataset& test,
                         const Hyperparameters& theta, const Options& opts = {});
/// Posterior mean and the diagonal of the posterior covariance.
PredictionResult predict_with_uncertainty(Context ctx, const Dataset& train, const Dataset& test,
                                          const Hyperparameters& theta, const Options& opts = {});
/// Posterior mean and the full M x M posterior covariance; `variance` is its diagonal.
PredictionResult predict_full_cov(Context ctx, const Dataset& train, const Dataset& test,
                                  const Hyperparameters& theta, const Options& opts = {});

/// Negative log marginal likelihood, including the (N/2) log(2 pi) constant.
double nlml(Context ctx, const Dataset& train, const Hyperparameters& theta,
            const Options& opts = {});

struct LossAndGradient {
  double loss = 0.0;
  /// d/dl, d/dnu, d/dsigma^2
  std::array<double, 3> gradient{};
};

/// Gradient of nlml with respect to (l, nu, sigma^2).
std::array<double, 3> nlml_gradient(Context ctx, const Dataset& train,
                                    const Hyperparameters& theta, const Options& opts = {});
/// Loss and gradient from a single graph sharing the factorization.
LossAndGradient loss_and_gradient(Context ctx, const Dataset& train, const Hyperparameters& theta,
                                  const Options& opts = {});

// ---- optimization ------------------------------------------------------------

struct AdamRates {
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::size_t step = 0;
  std::array<double, 3> m{};
  std::array<double, 3> v{};
  AdamRates rates;
};

struct AdamUpdate {
  AdamState state;
  std::array<double, 3> params;
};

/// One bias-corrected Adam update of `params` (minimizing).
AdamUpdate adam_step(const AdamState& state, const std::array<double, 3>& grad,
                     const std::array<double, 3>& params);

/// log(1 + e^x), computed without overflow.
double softplus(double x);
/// Inverse of softplus; requires y > 0.
double softplus_inverse(double y);

/// Unconstrained coordinates of theta. sigma^2 = 0 has no preimage and is
/// mapped from the smallest positive double.
std::array<double, 3> to_unconstrained(const Hyperparameters& theta);
Hyperparameters from_unconstrained(const std::array<double, 3>& raw);

struct OptimizeResult {
  Hyperparameters theta;
  /// Loss at the start of every iteration; loss_trace[0] = nlml(theta0).
  std::vector<double> loss_trace;
};

/// Adam on the softplus-unconstrained hyperparameters. Each iteration
/// evaluates loss and gradient in one graph, then takes one Adam step.
/// A factorization failure is rethrown with the iteration index attached.
OptimizeResult optimize(Context ctx, const Dataset& train, const Hyperparameters& theta0,
                        std::size_t iterations, const AdamRates& rates = {},
                        const Options& opts = {});

}  // namespace gprs::gp
