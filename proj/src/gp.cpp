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

#include "gprs/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gprs/error.hpp"

namespace gprs::gp {

using runtime::label;

namespace {

int as_int(std::size_t v) { return static_cast<int>(v); }

TileSpec train_spec_for(const Dataset& train, const Options& opts) {
  return make_spec(train.n(), opts.tiles_per_dim);
}

TileSpec test_spec_for(const Dataset& test, const Options& opts) {
  const std::size_t tiles = opts.test_tiles_per_dim != 0
                                ? opts.test_tiles_per_dim
                                : std::min(opts.tiles_per_dim, test.n());
  return make_spec(test.n(), tiles);
}

void check_pair(const Dataset& train, const Dataset& test) {
  if (train.n() == 0) throw DimensionError("training set is empty");
  if (test.n() == 0) throw DimensionError("test set is empty");
  if (train.d() != test.d())
    throw DimensionError("train D=" + std::to_string(train.d()) + " but test D=" +
                         std::to_string(test.d()));
}

/// Runs a graph-building body and returns once no task of it is in flight,
/// also when the body throws: tasks hold references to the caller's data.
template <class F>
auto run_graph(Context ctx, F&& body) {
  try {
    auto result = body();
    ctx.runtime.wait_idle();
    return result;
  } catch (...) {
    ctx.runtime.wait_idle();
    throw;
  }
}

Tile identity_tile(const TileSpec& spec, std::size_t t) {
  Tile id = make_tile(spec, t, spec, t);
  for (std::size_t i = 0; i < id.rows(); ++i) id(i, i) = 1.0;
  return id;
}

VectorSegments ready_targets(const Dataset& train, const TileSpec& spec) {
  return make_ready(scatter_vector(train.targets, spec));
}

std::vector<double> gather(const runtime::Runtime& rt, const VectorSegments& v) {
  return gather_vector(collect(rt, v));
}

/// sum_p 2 log(L_pp) over the valid diagonal, ascending.
Future<double> log_determinant(Context ctx, const SymmetricTiles& l) {
  std::vector<Future<Tile>> diag;
  for (std::size_t k = 0; k < l.spec.tiles_per_dim; ++k) diag.push_back(l.tile(k, k));
  return ctx.runtime.dataflow_all(
      label("logdet"),
      [](std::span<const Tile* const> tiles) {
        double sum = 0.0;
        for (const Tile* t : tiles)
          for (std::size_t i = 0; i < t->rows(); ++i) sum += 2.0 * std::log((*t)(i, i));
        return sum;
      },
      std::move(diag));
}

/// sum_k z_k . z_k, ascending.
Future<double> squared_norm(Context ctx, const VectorSegments& z) {
  const blas::Backend* blas = &ctx.blas;
  return ctx.runtime.dataflow_all(
      label("dot"),
      [blas](std::span<const Segment* const> segs) {
        double sum = 0.0;
        for (const Segment* s : segs) sum += blas->dot(*s, *s);
        return sum;
      },
      z.segments);
}

Future<double> loss_future(Context ctx, const SymmetricTiles& l, const VectorSegments& z,
                           std::size_t n) {
  const double constant = 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return ctx.runtime.dataflow(
      label("nlml"),
      [constant](const double& logdet, const double& quad) {
        return 0.5 * logdet + 0.5 * quad + constant;
      },
      log_determinant(ctx, l), squared_norm(ctx, z));
}

/// W = L^{-T} (block upper triangular), from W L^T = I skipping the blocks
/// that are known to stay zero.
PanelTiles inverse_transposed(Context ctx, const SymmetricTiles& l) {
  const TileSpec& spec = l.spec;
  const std::size_t nt = spec.tiles_per_dim;
  const blas::Backend* blas = &ctx.blas;
  PanelTiles w{spec, spec, {}};
  w.tiles.reserve(nt * nt);
  for (std::size_t r = 0; r < nt; ++r)
    for (std::size_t c = 0; c < nt; ++c)
      w.tiles.push_back(runtime::make_ready_future(r == c ? identity_tile(spec, r)
                                                          : make_tile(spec, r, spec, c)));
  for (std::size_t r = 0; r < nt; ++r) {
    for (std::size_t k = r; k < nt; ++k) {
      w.tile(r, k) = ctx.runtime.dataflow(
          label("trsm_inv", as_int(r), as_int(k)),
          [blas](const Tile& lkk, const Tile& b) { return blas->trsm_right_lower_transpose(lkk, b); },
          l.tile(k, k), w.tile(r, k));
      for (std::size_t i = k + 1; i < nt; ++i) {
        w.tile(r, i) = ctx.runtime.dataflow(
            label("gemm_inv", as_int(r), as_int(i), as_int(k)),
            [blas](const Tile& c, const Tile& a, const Tile& b) { return blas->gemm_update(c, a, b); },
            w.tile(r, i), w.tile(r, k), l.tile(i, k));
      }
    }
  }
  return w;
}

/// Lower tiles of K^{-1} = W W^T with W = L^{-T}.
SymmetricTiles inverse_from_factor(Context ctx, const SymmetricTiles& l) {
  const PanelTiles w = inverse_transposed(ctx, l);
  const TileSpec& spec = l.spec;
  const std::size_t nt = spec.tiles_per_dim;
  const blas::Backend* blas = &ctx.blas;
  SymmetricTiles inv{spec, {}};
  inv.tiles.reserve(lower_tile_count(nt));
  for (std::size_t r = 0; r < nt; ++r) {
    for (std::size_t s = 0; s <= r; ++s) {
      Future<Tile> acc = runtime::make_ready_future(make_tile(spec, r, spec, s));
      // W(r, c) vanishes for c < r.
      for (std::size_t c = r; c < nt; ++c) {
        acc = ctx.runtime.dataflow(
            label("gemm_kinv", as_int(r), as_int(s), as_int(c)),
            [blas](const Tile& acc_tile, const Tile& a, const Tile& b) {
              return blas->gemm_full(acc_tile, a, b, blas::Transpose::no, blas::Transpose::yes, 1.0);
            },
            acc, w.tile(r, c), w.tile(s, c));
      }
      inv.tiles.push_back(std::move(acc));
    }
  }
  return inv;
}

/// Per-tile share of the gradient: 1/2 tr(K^{-1} dK) - 1/2 a^T dK a, counting
/// off-diagonal tiles twice for their mirror image.
Future<std::array<double, 3>> gradient_future(Context ctx, const Dataset& train,
                                              const Hyperparameters& theta,
                                              const SymmetricTiles& l,
                                              const VectorSegments& alpha) {
  const TileSpec spec = l.spec;
  const SymmetricTiles inv = inverse_from_factor(ctx, l);
  std::vector<Future<std::array<double, 3>>> parts;
  parts.reserve(inv.tiles.size());
  const Dataset* data = &train;
  for (std::size_t i = 0; i < spec.tiles_per_dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      parts.push_back(ctx.runtime.dataflow(
          label("grad", as_int(i), as_int(j)),
          [data, theta, spec, i, j](const Tile& kinv, const Segment& ai, const Segment& aj) {
            const auto dk = grad_tiles(*data, theta, i, j, spec);
            const double weight = i == j ? 1.0 : 2.0;
            std::array<double, 3> out{};
            for (std::size_t p = 0; p < 3; ++p) {
              const Tile& g = dk[p];
              double trace = 0.0;
              double quad = 0.0;
              for (std::size_t r = 0; r < g.rows(); ++r) {
                double row = 0.0;
                for (std::size_t c = 0; c < g.cols(); ++c) {
                  trace += kinv(r, c) * g(r, c);
                  row += g(r, c) * aj[c];
                }
                quad += ai[r] * row;
              }
              out[p] = weight * (0.5 * trace - 0.5 * quad);
            }
            return out;
          },
          inv.tile(i, j), alpha.segments[i], alpha.segments[j]));
    }
  }
  return ctx.runtime.dataflow_all(
      label("grad_reduce"),
      [](std::span<const std::array<double, 3>* const> xs) {
        std::array<double, 3> sum{};
        for (const auto* x : xs)
          for (std::size_t p = 0; p < 3; ++p) sum[p] += (*x)[p];
        return sum;
      },
      std::move(parts));
}

}  // namespace

// ---- conversions -------------------------------------------------------------

SymmetricTiles make_ready(const TiledSymmetricMatrix& m) {
  SymmetricTiles out{m.spec, {}};
  out.tiles.reserve(m.tiles.size());
  for (const Tile& t : m.tiles) out.tiles.push_back(runtime::make_ready_future(t));
  return out;
}

PanelTiles make_ready(const TiledPanel& p) {
  PanelTiles out{p.row_spec, p.col_spec, {}};
  out.tiles.reserve(p.tiles.size());
  for (const Tile& t : p.tiles) out.tiles.push_back(runtime::make_ready_future(t));
  return out;
}

VectorSegments make_ready(const TiledVector& v) {
  VectorSegments out{v.spec, {}};
  out.segments.reserve(v.segments.size());
  for (const Segment& s : v.segments) out.segments.push_back(runtime::make_ready_future(s));
  return out;
}

TiledSymmetricMatrix collect(const runtime::Runtime& rt, const SymmetricTiles& m) {
  return TiledSymmetricMatrix{m.spec, rt.wait_all(m.tiles)};
}

TiledPanel collect(const runtime::Runtime& rt, const PanelTiles& p) {
  return TiledPanel{p.row_spec, p.col_spec, rt.wait_all(p.tiles)};
}

TiledVector collect(const runtime::Runtime& rt, const VectorSegments& v) {
  return TiledVector{v.spec, rt.wait_all(v.segments)};
}

// ---- graph builders ------------------------------------------------------------

SymmetricTiles assemble_covariance(Context ctx, const Dataset& train, const Hyperparameters& theta,
                                   const TileSpec& spec) {
  if (train.n() != spec.n_total) throw DimensionError("training set does not match tile spec");
  SymmetricTiles k{spec, {}};
  k.tiles.reserve(lower_tile_count(spec.tiles_per_dim));
  const Dataset* data = &train;
  for (std::size_t i = 0; i < spec.tiles_per_dim; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      k.tiles.push_back(ctx.runtime.dataflow(
          label("assemble_cov", as_int(i), as_int(j)),
          [data, theta, spec, i, j] { return assemble_cov_tile(*data, theta, i, j, spec); }));
  return k;
}

PanelTiles assemble_cross_covariance(Context ctx, const Dataset& test, const Dataset& train,
                                     const Hyperparameters& theta, const TileSpec& test_spec,
                                     const TileSpec& train_spec) {
  if (test.d() != train.d()) throw DimensionError("test and train feature dimensions differ");
  PanelTiles c{test_spec, train_spec, {}};
  c.tiles.reserve(test_spec.tiles_per_dim * train_spec.tiles_per_dim);
  const Dataset* te = &test;
  const Dataset* tr = &train;
  for (std::size_t i = 0; i < test_spec.tiles_per_dim; ++i)
    for (std::size_t j = 0; j < train_spec.tiles_per_dim; ++j)
      c.tiles.push_back(ctx.runtime.dataflow(
          label("assemble_cross", as_int(i), as_int(j)), [te, tr, theta, test_spec, train_spec, i, j] {
            return assemble_cross_tile(*te, *tr, theta, i, j, test_spec, train_spec);
          }));
  return c;
}

SymmetricTiles assemble_prior_covariance(Context ctx, const Dataset& test,
                                         const Hyperparameters& theta, const TileSpec& spec,
                                         PriorNoise noise) {
  SymmetricTiles p{spec, {}};
  p.tiles.reserve(lower_tile_count(spec.tiles_per_dim));
  const Dataset* data = &test;
  for (std::size_t i = 0; i < spec.tiles_per_dim; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      p.tiles.push_back(ctx.runtime.dataflow(
          label("assemble_prior", as_int(i), as_int(j)),
          [data, theta, spec, i, j, noise] {
            return assemble_prior_tile(*data, theta, i, j, spec, noise);
          }));
  return p;
}

SymmetricTiles tiled_cholesky(Context ctx, SymmetricTiles k) {
  const std::size_t nt = k.spec.tiles_per_dim;
  if (k.tiles.size() != lower_tile_count(nt))
    throw DimensionError("tiled_cholesky: tile count does not match spec");
  const blas::Backend* blas = &ctx.blas;
  for (std::size_t s = 0; s < nt; ++s) {
    k.tile(s, s) = ctx.runtime.dataflow(
        label("potrf", as_int(s), as_int(s)),
        [blas, s](const Tile& a) {
          try {
            return blas->potrf(a);
          } catch (const FactorizationError& e) {
            throw FactorizationError(e.pivot(), s);
          }
        },
        k.tile(s, s));
    for (std::size_t i = s + 1; i < nt; ++i) {
      k.tile(i, s) = ctx.runtime.dataflow(
          label("trsm", as_int(i), as_int(s)),
          [blas](const Tile& l, const Tile& b) { return blas->trsm_right_lower_transpose(l, b); },
          k.tile(s, s), k.tile(i, s));
    }
    for (std::size_t i = s + 1; i < nt; ++i) {
      k.tile(i, i) = ctx.runtime.dataflow(
          label("syrk", as_int(i), as_int(i), as_int(s)),
          [blas](const Tile& c, const Tile& a) { return blas->syrk_lower(c, a); }, k.tile(i, i),
          k.tile(i, s));
      for (std::size_t j = s + 1; j < i; ++j) {
        k.tile(i, j) = ctx.runtime.dataflow(
            label("gemm", as_int(i), as_int(j), as_int(s)),
            [blas](const Tile& c, const Tile& a, const Tile& b) { return blas->gemm_update(c, a, b); },
            k.tile(i, j), k.tile(i, s), k.tile(j, s));
      }
    }
  }
  return k;
}

VectorSegments forward_substitution(Context ctx, const SymmetricTiles& l, VectorSegments b) {
  if (b.spec != l.spec) throw DimensionError("forward_substitution: vector/factor tiling differs");
  const std::size_t nt = l.spec.tiles_per_dim;
  const blas::Backend* blas = &ctx.blas;
  for (std::size_t k = 0; k < nt; ++k) {
    b.segments[k] = ctx.runtime.dataflow(
        label("trsv_forward", as_int(k), as_int(k)),
        [blas](const Tile& lkk, const Segment& x) { return blas->trsv_forward(lkk, x); },
        l.tile(k, k), b.segments[k]);
    for (std::size_t i = k + 1; i < nt; ++i) {
      b.segments[i] = ctx.runtime.dataflow(
          label("gemv", as_int(i), as_int(k)),
          [blas](const Segment& y, const Tile& a, const Segment& x) {
            return blas->gemv_update(y, a, x, blas::Transpose::no, -1.0);
          },
          b.segments[i], l.tile(i, k), b.segments[k]);
    }
  }
  return b;
}

VectorSegments backward_substitution(Context ctx, const SymmetricTiles& l, VectorSegments b) {
  if (b.spec != l.spec) throw DimensionError("backward_substitution: vector/factor tiling differs");
  const std::size_t nt = l.spec.tiles_per_dim;
  const blas::Backend* blas = &ctx.blas;
  for (std::size_t k = nt; k-- > 0;) {
    b.segments[k] = ctx.runtime.dataflow(
        label("trsv_backward", as_int(k), as_int(k)),
        [blas](const Tile& lkk, const Segment& x) { return blas->trsv_backward(lkk, x); },
        l.tile(k, k), b.segments[k]);
    for (std::size_t i = 0; i < k; ++i) {
      b.segments[i] = ctx.runtime.dataflow(
          label("gemv_t", as_int(k), as_int(i)),
          [blas](const Segment& y, const Tile& a, const Segment& x) {
            return blas->gemv_update(y, a, x, blas::Transpose::yes, -1.0);
          },
          b.segments[i], l.tile(k, i), b.segments[k]);
    }
  }
  return b;
}

PanelTiles panel_forward_substitution(Context ctx, const SymmetricTiles& l, PanelTiles c) {
  if (c.col_spec != l.spec)
    throw DimensionError("panel_forward_substitution: panel columns do not match factor tiling");
  const std::size_t nt = l.spec.tiles_per_dim;
  const blas::Backend* blas = &ctx.blas;
  for (std::size_t r = 0; r < c.row_spec.tiles_per_dim; ++r) {
    for (std::size_t k = 0; k < nt; ++k) {
      c.tile(r, k) = ctx.runtime.dataflow(
          label("trsm_panel", as_int(r), as_int(k)),
          [blas](const Tile& lkk, const Tile& b) { return blas->trsm_right_lower_transpose(lkk, b); },
          l.tile(k, k), c.tile(r, k));
      for (std::size_t i = k + 1; i < nt; ++i) {
        c.tile(r, i) = ctx.runtime.dataflow(
            label("gemm_panel", as_int(r), as_int(i), as_int(k)),
            [blas](const Tile& acc, const Tile& a, const Tile& b) { return blas->gemm_update(acc, a, b); },
            c.tile(r, i), c.tile(r, k), l.tile(i, k));
      }
    }
  }
  return c;
}

// ---- pipelines -----------------------------------------------------------------

CholeskyFactor cholesky(Context ctx, const Dataset& train, const Hyperparameters& theta,
                        const Options& opts) {
  const TileSpec spec = train_spec_for(train, opts);
  return run_graph(ctx, [&] {
    const SymmetricTiles l = tiled_cholesky(ctx, assemble_covariance(ctx, train, theta, spec));
    return CholeskyFactor{collect(ctx.runtime, l), theta};
  });
}

namespace {

enum class Output { mean, variance, full };

PredictionResult predict_impl(Context ctx, const Dataset& train, const Dataset& test,
                              const Hyperparameters& theta, const Options& opts, Output what) {
  check_pair(train, test);
  const TileSpec tr = train_spec_for(train, opts);
  const TileSpec te = test_spec_for(test, opts);
  const blas::Backend* blas = &ctx.blas;

  return run_graph(ctx, [&] {
    const SymmetricTiles l = tiled_cholesky(ctx, assemble_covariance(ctx, train, theta, tr));
    const VectorSegments alpha =
        backward_substitution(ctx, l, forward_substitution(ctx, l, ready_targets(train, tr)));
    const PanelTiles cross = assemble_cross_covariance(ctx, test, train, theta, te, tr);

    VectorSegments mean{te, {}};
    for (std::size_t r = 0; r < te.tiles_per_dim; ++r) {
      Future<Segment> acc = runtime::make_ready_future(make_segment(te, r));
      for (std::size_t c = 0; c < tr.tiles_per_dim; ++c) {
        acc = ctx.runtime.dataflow(
            label("gemv_mean", as_int(r), as_int(c)),
            [blas](const Segment& y, const Tile& a, const Segment& x) {
              return blas->gemv_update(y, a, x, blas::Transpose::no, 1.0);
            },
            acc, cross.tile(r, c), alpha.segments[c]);
      }
      mean.segments.push_back(std::move(acc));
    }

    PredictionResult result;
    if (what == Output::variance) {
      const PanelTiles w = panel_forward_substitution(ctx, l, cross);
      VectorSegments var{te, {}};
      const Dataset* data = &test;
      const PriorNoise noise = opts.prior_noise;
      for (std::size_t r = 0; r < te.tiles_per_dim; ++r) {
        Future<Segment> acc = ctx.runtime.dataflow(
            label("assemble_prior_diag", as_int(r)),
            [data, theta, te, r, noise] { return assemble_prior_diagonal(*data, theta, r, te, noise); });
        for (std::size_t c = 0; c < tr.tiles_per_dim; ++c) {
          acc = ctx.runtime.dataflow(
              label("variance", as_int(r), as_int(c)),
              [](const Segment& d, const Tile& wt) {
                Segment out = d;
                for (std::size_t a = 0; a < wt.rows(); ++a) {
                  double acc_sq = 0.0;
                  for (std::size_t b = 0; b < wt.cols(); ++b) acc_sq += wt(a, b) * wt(a, b);
                  out[a] -= acc_sq;
                }
                return out;
              },
              acc, w.tile(r, c));
        }
        var.segments.push_back(std::move(acc));
      }
      result.variance = gather(ctx.runtime, var);
    } else if (what == Output::full) {
      const PanelTiles w = panel_forward_substitution(ctx, l, cross);
      SymmetricTiles sigma = assemble_prior_covariance(ctx, test, theta, te, opts.prior_noise);
      for (std::size_t r = 0; r < te.tiles_per_dim; ++r) {
        for (std::size_t s = 0; s <= r; ++s) {
          for (std::size_t c = 0; c < tr.tiles_per_dim; ++c) {
            if (r == s) {
              sigma.tile(r, r) = ctx.runtime.dataflow(
                  label("syrk_cov", as_int(r), as_int(r), as_int(c)),
                  [blas](const Tile& acc, const Tile& a) { return blas->syrk_lower(acc, a); },
                  sigma.tile(r, r), w.tile(r, c));
            } else {
              sigma.tile(r, s) = ctx.runtime.dataflow(
                  label("gemm_cov", as_int(r), as_int(s), as_int(c)),
                  [blas](const Tile& acc, const Tile& a, const Tile& b) {
                    return blas->gemm_update(acc, a, b);
                  },
                  sigma.tile(r, s), w.tile(r, c), w.tile(s, c));
            }
          }
        }
      }
      Matrix cov = to_dense(collect(ctx.runtime, sigma));
      std::vector<double> diag(cov.rows());
      for (std::size_t i = 0; i < cov.rows(); ++i) diag[i] = cov(i, i);
      result.variance = std::move(diag);
      result.full_cov = std::move(cov);
    }
    result.mean = gather(ctx.runtime, mean);
    return result;
  });
}

}  // namespace

PredictionResult predict(Context ctx, const Dataset& train, const Dataset& test,
                         const Hyperparameters& theta, const Options& opts) {
  return predict_impl(ctx, train, test, theta, opts, Output::mean);
}

PredictionResult predict_with_uncertainty(Context ctx, const Dataset& train, const Dataset& test,
                                          const Hyperparameters& theta, const Options& opts) {
  return predict_impl(ctx, train, test, theta, opts, Output::variance);
}

PredictionResult predict_full_cov(Context ctx, const Dataset& train, const Dataset& test,
                                  const Hyperparameters& theta, const Options& opts) {
  return predict_impl(ctx, train, test, theta, opts, Output::full);
}

double nlml(Context ctx, const Dataset& train, const Hyperparameters& theta, const Options& opts) {
  const TileSpec spec = train_spec_for(train, opts);
  return run_graph(ctx, [&] {
    const SymmetricTiles l = tiled_cholesky(ctx, assemble_covariance(ctx, train, theta, spec));
    const VectorSegments z = forward_substitution(ctx, l, ready_targets(train, spec));
    return ctx.runtime.wait(loss_future(ctx, l, z, train.n()));
  });
}

LossAndGradient loss_and_gradient(Context ctx, const Dataset& train, const Hyperparameters& theta,
                                  const Options& opts) {
  const TileSpec spec = train_spec_for(train, opts);
  return run_graph(ctx, [&] {
    const SymmetricTiles l = tiled_cholesky(ctx, assemble_covariance(ctx, train, theta, spec));
    const VectorSegments z = forward_substitution(ctx, l, ready_targets(train, spec));
    const VectorSegments alpha = backward_substitution(ctx, l, z);
    const Future<double> loss = loss_future(ctx, l, z, train.n());
    const Future<std::array<double, 3>> grad = gradient_future(ctx, train, theta, l, alpha);
    return LossAndGradient{ctx.runtime.wait(loss), ctx.runtime.wait(grad)};
  });
}

std::array<double, 3> nlml_gradient(Context ctx, const Dataset& train,
                                    const Hyperparameters& theta, const Options& opts) {
  const TileSpec spec = train_spec_for(train, opts);
  return run_graph(ctx, [&] {
    const SymmetricTiles l = tiled_cholesky(ctx, assemble_covariance(ctx, train, theta, spec));
    const VectorSegments alpha =
        backward_substitution(ctx, l, forward_substitution(ctx, l, ready_targets(train, spec)));
    return ctx.runtime.wait(gradient_future(ctx, train, theta, l, alpha));
  });
}

OptimizeResult optimize(Context ctx, const Dataset& train, const Hyperparameters& theta0,
                        std::size_t iterations, const AdamRates& rates, const Options& opts) {
  if (iterations == 0) throw ConfigError("optimize: iterations must be at least 1");
  std::array<double, 3> raw = to_unconstrained(theta0);
  AdamState state;
  state.rates = rates;
  std::vector<double> trace;
  trace.reserve(iterations);
  for (std::size_t it = 0; it < iterations; ++it) {
    // The first evaluation uses theta0 itself, not its softplus round trip.
    const Hyperparameters theta = it == 0 ? theta0 : from_unconstrained(raw);
    LossAndGradient lg;
    try {
      lg = loss_and_gradient(ctx, train, theta, opts);
    } catch (const FactorizationError& e) {
      throw FactorizationError(e.pivot(), e.tile(), it);
    }
    trace.push_back(lg.loss);
    std::array<double, 3> g{};
    for (std::size_t p = 0; p < 3; ++p) {
      const double dtheta_draw = 1.0 / (1.0 + std::exp(-raw[p]));  // softplus'
      g[p] = lg.gradient[p] * dtheta_draw;
    }
    AdamUpdate up = adam_step(state, g, raw);
    state = up.state;
    raw = up.params;
  }
  return OptimizeResult{from_unconstrained(raw), std::move(trace)};
}

}  // namespace gprs::gp
