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
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gprs/error.hpp"
#include "gprs/gp.hpp"
#include "oracle.hpp"

namespace gprs::gp {
namespace {

using oracle::MatrixXd;
using oracle::VectorXd;

runtime::PoolConfig quiet(std::size_t workers) { return {workers, false, false}; }

class GpTest : public ::testing::Test {
 protected:
  GpTest() : rt(quiet(2)), blas(blas::make_backend(blas::BackendId::reference)) {}
  Context ctx() { return Context{rt, *blas}; }

  runtime::Runtime rt;
  std::unique_ptr<blas::Backend> blas;
};

Dataset line(std::initializer_list<double> xs, std::initializer_list<double> ys) {
  Matrix z(xs.size(), 1);
  std::size_t i = 0;
  for (double x : xs) z(i++, 0) = x;
  return {std::move(z), std::vector<double>(ys)};
}

Options tiles(std::size_t t) {
  Options o;
  o.tiles_per_dim = t;
  return o;
}

Matrix random_spd(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
  const MatrixXd s = a * a.transpose() + static_cast<double>(n) * MatrixXd::Identity(n, n);
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) m(r, c) = s(r, c);
  return m;
}

TEST_F(GpTest, SingleTileCholeskyExample) {
  Matrix k(2, 2);
  k(0, 0) = 4; k(0, 1) = 2; k(1, 0) = 2; k(1, 1) = 3;
  const auto l = collect(rt, tiled_cholesky(ctx(), make_ready(tile_symmetric(k, make_spec(2, 1)))));
  const Matrix d = to_dense_lower(l);
  EXPECT_DOUBLE_EQ(d(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(d(1, 0), 1.0);
  EXPECT_NEAR(d(1, 1), 1.41421356, 1e-8);
  EXPECT_EQ(d(0, 1), 0.0);
}

TEST_F(GpTest, CholeskyTaskCountFormula) {
  std::mt19937_64 rng(1);
  for (std::size_t t : {1u, 2u, 3u, 4u, 8u, 16u}) {
    const auto k = make_ready(tile_symmetric(random_spd(2 * t, rng), make_spec(2 * t, t)));
    rt.wait_idle();
    const auto before = rt.tasks_executed();
    const auto l = tiled_cholesky(ctx(), k);
    collect(rt, l);
    rt.wait_idle();
    EXPECT_EQ(rt.tasks_executed() - before, t + t * (t - 1) + t * (t - 1) * (t - 2) / 6)
        << "T=" << t;
  }
}

TEST_F(GpTest, CholeskyMatchesDenseFactor) {
  std::mt19937_64 rng(2);
  const Dataset ds = oracle::random_dataset(256, 3, rng);
  const Hyperparameters th(0.7, 1.3, 0.05);
  const CholeskyFactor f = cholesky(ctx(), ds, th, tiles(4));
  EXPECT_EQ(f.theta_used, th);
  const MatrixXd want = Eigen::LLT<MatrixXd>(oracle::covariance(ds, th)).matrixL();
  const MatrixXd got = oracle::to_eigen(to_dense_lower(f.factor));
  EXPECT_LT(oracle::rel_err(got, want), 1e-10);
  EXPECT_LT(oracle::rel_err(MatrixXd(got * got.transpose()), oracle::covariance(ds, th)), 1e-10);

  // log-determinant consistency
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < got.rows(); ++i) logdet += 2.0 * std::log(got(i, i));
  EXPECT_NEAR(logdet, 2.0 * want.diagonal().array().log().sum(), 1e-9);
}

TEST_F(GpTest, SubstitutionExamples) {
  const TileSpec s2 = make_spec(2, 1);
  const auto id = make_ready(tile_symmetric(Matrix::identity(2), s2));
  const std::vector<double> b{2.0, 3.0};
  EXPECT_EQ(gather_vector(collect(rt, forward_substitution(ctx(), id, make_ready(scatter_vector(b, s2))))),
            b);
  Matrix l(2, 2);
  l(0, 0) = 2; l(1, 0) = 1; l(1, 1) = 1;
  const auto lt = make_ready(tile_symmetric(l, s2));
  const auto z = gather_vector(collect(rt, forward_substitution(ctx(), lt, make_ready(scatter_vector(b, s2)))));
  EXPECT_DOUBLE_EQ(z[0], 1.0);
  EXPECT_DOUBLE_EQ(z[1], 2.0);
}

TEST_F(GpTest, SolveMultiplyBack) {
  std::mt19937_64 rng(3);
  const Dataset ds = oracle::random_dataset(128, 2, rng);
  const Hyperparameters th(1.1, 0.9, 0.1);
  const TileSpec s = make_spec(128, 4);
  const auto l = tiled_cholesky(ctx(), assemble_covariance(ctx(), ds, th, s));
  const auto z = forward_substitution(ctx(), l, make_ready(scatter_vector(ds.targets, s)));
  const auto alpha = gather_vector(collect(rt, backward_substitution(ctx(), l, z)));
  const VectorXd kb = oracle::covariance(ds, th) * oracle::to_eigen(alpha);
  EXPECT_LT(oracle::rel_err(MatrixXd(kb), MatrixXd(oracle::to_eigen(ds.targets))), 1e-10);
}

TEST_F(GpTest, PanelSolve) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix c(64, 64);
  for (double& x : c.data()) x = u(rng);
  const TileSpec s = make_spec(64, 2);

  const auto id = make_ready(tile_symmetric(Matrix::identity(64), s));
  EXPECT_EQ(to_dense(collect(rt, panel_forward_substitution(ctx(), id, make_ready(tile_panel(c, s, s))))),
            c);

  const Matrix k = random_spd(64, rng);
  const auto l = tiled_cholesky(ctx(), make_ready(tile_symmetric(k, s)));
  const auto w = collect(rt, panel_forward_substitution(ctx(), l, make_ready(tile_panel(c, s, s))));
  const MatrixXd le = oracle::to_eigen(to_dense_lower(collect(rt, l)));
  const MatrixXd we = oracle::to_eigen(to_dense(w));
  // W = V^T with L V = C^T, i.e. W L^T = C.
  EXPECT_LT(oracle::rel_err(MatrixXd(we * le.transpose()), oracle::to_eigen(c)), 1e-10);
  EXPECT_LT(oracle::rel_err(MatrixXd(le * we.transpose()), MatrixXd(oracle::to_eigen(c).transpose())),
            1e-10);
}

TEST_F(GpTest, PredictScalarLimits) {
  const Dataset one = line({0.3}, {1.7});
  for (double s2 : {1e-2, 1e-6, 1e-10}) {
    const auto r = predict_with_uncertainty(ctx(), one, one, Hyperparameters(1, 1, s2));
    EXPECT_NEAR(r.mean[0], 1.7 / (1.0 + s2), 1e-15);
    EXPECT_NEAR((*r.variance)[0], 1.0 - 1.0 / (1.0 + s2), 1e-12);
  }
  const Dataset far = line({1e4}, {0.0});
  const auto r = predict_with_uncertainty(ctx(), one, far, Hyperparameters(1, 2.5, 0.1));
  EXPECT_EQ(r.mean[0], 0.0);
  EXPECT_EQ((*r.variance)[0], 2.5);
}

TEST_F(GpTest, PredictionsMatchDenseOracle) {
  std::mt19937_64 rng(5);
  const Dataset train = oracle::random_dataset(128, 3, rng);
  const Dataset test = oracle::random_dataset(128, 3, rng);
  const Hyperparameters th(0.9, 1.4, 0.08);
  const auto want = oracle::predict(train, test, th);
  for (std::size_t t : {1u, 4u}) {
    const auto m = predict(ctx(), train, test, th, tiles(t));
    EXPECT_FALSE(m.variance);
    EXPECT_FALSE(m.full_cov);
    EXPECT_LT(oracle::rel_err(m.mean, want.mean), 1e-9);

    const auto u = predict_with_uncertainty(ctx(), train, test, th, tiles(t));
    EXPECT_EQ(u.mean, m.mean);
    ASSERT_TRUE(u.variance);
    for (std::size_t i = 0; i < 128; ++i) EXPECT_NEAR((*u.variance)[i], want.cov(i, i), 1e-9);

    const auto f = predict_full_cov(ctx(), train, test, th, tiles(t));
    ASSERT_TRUE(f.full_cov);
    EXPECT_LT(oracle::rel_err(oracle::to_eigen(*f.full_cov), want.cov), 1e-9);
    EXPECT_EQ(*f.full_cov, f.full_cov->transposed());
    for (std::size_t i = 0; i < 128; ++i) {
      EXPECT_EQ((*f.variance)[i], (*f.full_cov)(i, i));
      EXPECT_NEAR((*f.variance)[i], (*u.variance)[i], 1e-12);
      EXPECT_GE((*f.variance)[i], -1e-10);
    }
  }
}

TEST_F(GpTest, FullCovWithSingleTestPoint) {
  std::mt19937_64 rng(6);
  const Dataset train = oracle::random_dataset(20, 2, rng);
  const Dataset test = oracle::random_dataset(1, 2, rng);
  const Hyperparameters th(1, 1, 0.1);
  const auto f = predict_full_cov(ctx(), train, test, th, tiles(3));
  const auto u = predict_with_uncertainty(ctx(), train, test, th, tiles(3));
  EXPECT_EQ(f.mean, u.mean);
  EXPECT_NEAR((*f.full_cov)(0, 0), (*u.variance)[0], 1e-14);
}

TEST_F(GpTest, PriorNoiseOption) {
  std::mt19937_64 rng(7);
  const Dataset train = oracle::random_dataset(30, 2, rng);
  const Dataset test = oracle::random_dataset(9, 2, rng);
  const Hyperparameters th(1, 1, 0.3);
  Options noisy = tiles(2);
  noisy.prior_noise = PriorNoise::included;
  const auto a = predict_full_cov(ctx(), train, test, th, tiles(2));
  const auto b = predict_full_cov(ctx(), train, test, th, noisy);
  const auto want = oracle::predict(train, test, th, true);
  EXPECT_LT(oracle::rel_err(oracle::to_eigen(*b.full_cov), want.cov), 1e-9);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR((*b.variance)[i] - (*a.variance)[i], 0.3, 1e-12);
}

TEST_F(GpTest, UnevenTilingsAndTestTiles) {
  std::mt19937_64 rng(8);
  const Dataset train = oracle::random_dataset(37, 2, rng);
  const Dataset test = oracle::random_dataset(3, 2, rng);
  const Hyperparameters th(0.8, 1.2, 0.05);
  const auto want = oracle::predict(train, test, th);
  for (std::size_t t : {1u, 5u, 8u, 37u}) {
    for (std::size_t tt : {0u, 1u, 2u, 3u}) {
      Options o = tiles(t);
      o.test_tiles_per_dim = tt;
      const auto f = predict_full_cov(ctx(), train, test, th, o);
      ASSERT_LT(oracle::rel_err(f.mean, want.mean), 1e-9) << t << "," << tt;
      ASSERT_LT(oracle::rel_err(oracle::to_eigen(*f.full_cov), want.cov), 1e-9);
    }
  }
}

TEST_F(GpTest, NlmlExamples) {
  const double c = 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(nlml(ctx(), line({0.0}, {0.0}), Hyperparameters(1, 1, 0)), c, 1e-15);
  EXPECT_NEAR(nlml(ctx(), line({0.0}, {2.0}), Hyperparameters(1, 1, 0)), 2.0 + c, 1e-15);
  EXPECT_NEAR(c, 0.918939, 1e-6);
}

TEST_F(GpTest, NlmlMatchesOracleAcrossTilings) {
  std::mt19937_64 rng(9);
  const Dataset ds = oracle::random_dataset(256, 3, rng);
  const Hyperparameters th(1.3, 0.8, 0.02);
  const double want = oracle::nlml(ds, th);
  for (std::size_t t : {1u, 4u, 16u})
    EXPECT_LT(oracle::rel_err(nlml(ctx(), ds, th, tiles(t)), want), 1e-9) << "T=" << t;
}

TEST_F(GpTest, GradientClosedForms) {
  // Points far apart: K = (nu + sigma^2) I exactly.
  const Dataset sparse = line({0.0, 100.0, 200.0, 300.0, 400.0}, {0, 0, 0, 0, 0});
  const Hyperparameters th(1.0, 1.5, 0.5);
  const auto g = nlml_gradient(ctx(), sparse, th, tiles(2));
  EXPECT_NEAR(g[2], 5.0 / (2.0 * 2.0), 1e-14);

  const Dataset same = line({0.4, 0.4, 0.4}, {1.0, -0.5, 0.2});
  EXPECT_EQ(nlml_gradient(ctx(), same, Hyperparameters(1, 1, 0.1), tiles(2))[0], 0.0);
}

TEST_F(GpTest, GradientMatchesOracleAndFiniteDifferences) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> p(0.2, 3.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset ds = oracle::random_dataset(64, 2, rng);
    const Hyperparameters th(p(rng), p(rng), std::uniform_real_distribution<double>(0.05, 1.0)(rng));
    const auto g = nlml_gradient(ctx(), ds, th, tiles(4));
    const auto want = oracle::gradient(ds, th);
    for (int k = 0; k < 3; ++k) {
      EXPECT_LT(oracle::rel_err(g[k], want(k)), 1e-9);
      auto hi = th.as_array();
      auto lo = th.as_array();
      hi[k] += h;
      lo[k] -= h;
      const double fd = (nlml(ctx(), ds, Hyperparameters(hi[0], hi[1], hi[2]), tiles(4)) -
                         nlml(ctx(), ds, Hyperparameters(lo[0], lo[1], lo[2]), tiles(4))) /
                        (2 * h);
      EXPECT_LT(oracle::rel_err(g[k], fd), 1e-5) << "trial " << trial << " k " << k;
    }
    const auto lg = loss_and_gradient(ctx(), ds, th, tiles(4));
    EXPECT_EQ(lg.loss, nlml(ctx(), ds, th, tiles(4)));
    EXPECT_EQ(lg.gradient, g);
  }
}

TEST_F(GpTest, TileCountInvariance) {
  std::mt19937_64 rng(11);
  const Dataset train = oracle::random_dataset(128, 3, rng);
  const Dataset test = oracle::random_dataset(64, 3, rng);
  const Hyperparameters th(1.0, 1.0, 0.1);
  const auto base = predict_full_cov(ctx(), train, test, th, tiles(1));
  const double base_loss = nlml(ctx(), train, th, tiles(1));
  for (std::size_t t : {2u, 4u, 8u, 16u}) {
    const auto r = predict_full_cov(ctx(), train, test, th, tiles(t));
    EXPECT_LT(oracle::rel_err(r.mean, oracle::to_eigen(base.mean)), 1e-9);
    EXPECT_LT(oracle::rel_err(oracle::to_eigen(*r.full_cov), oracle::to_eigen(*base.full_cov)), 1e-9);
    EXPECT_LT(oracle::rel_err(nlml(ctx(), train, th, tiles(t)), base_loss), 1e-9);
  }
}

TEST(GpDeterminism, BitwiseAcrossWorkerCounts) {
  std::mt19937_64 rng(12);
  const Dataset train = oracle::random_dataset(96, 2, rng);
  const Dataset test = oracle::random_dataset(40, 2, rng);
  const Hyperparameters th(0.7, 1.1, 0.05);
  const auto be = blas::make_backend(blas::BackendId::reference);
  std::optional<PredictionResult> first;
  std::optional<LossAndGradient> first_lg;
  for (std::size_t w : {1u, 2u, 4u}) {
    runtime::Runtime rt(quiet(w));
    const Context ctx{rt, *be};
    const auto r = predict_full_cov(ctx, train, test, th, tiles(4));
    const auto lg = loss_and_gradient(ctx, train, th, tiles(4));
    if (!first) {
      first = r;
      first_lg = lg;
      continue;
    }
    EXPECT_EQ(r.mean, first->mean);
    EXPECT_EQ(*r.full_cov, *first->full_cov);
    EXPECT_EQ(lg.loss, first_lg->loss);
    EXPECT_EQ(lg.gradient, first_lg->gradient);
  }
}

TEST_F(GpTest, PaddingNeverObservable) {
  std::mt19937_64 rng(13);
  const std::size_t n = 10;
  const TileSpec s = make_spec(n, 4);
  const Matrix k = random_spd(n, rng);
  std::vector<double> b(n);
  for (double& x : b) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  Matrix c(7, n);
  for (double& x : c.data()) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  const TileSpec cs = make_spec(7, 3);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto poison = [&](auto tiled) {
    for (auto& t : tiled.tiles)
      for (std::size_t r = 0; r < t.padded_rows(); ++r)
        for (std::size_t col = 0; col < t.padded_cols(); ++col)
          if (r >= t.rows() || col >= t.cols()) t(r, col) = nan;
    return tiled;
  };
  auto run = [&](bool fuzz) {
    auto kt = tile_symmetric(k, s);
    auto ct = tile_panel(c, cs, s);
    auto bt = scatter_vector(b, s);
    if (fuzz) {
      kt = poison(kt);
      ct = poison(ct);
      for (auto& seg : bt.segments)
        for (std::size_t i = seg.size(); i < seg.padded_size(); ++i) seg[i] = nan;
    }
    const auto l = tiled_cholesky(ctx(), make_ready(kt));
    const auto x = backward_substitution(ctx(), l, forward_substitution(ctx(), l, make_ready(bt)));
    const auto w = panel_forward_substitution(ctx(), l, make_ready(ct));
    return std::make_tuple(to_dense_lower(collect(rt, l)), gather_vector(collect(rt, x)),
                           to_dense(collect(rt, w)));
  };
  const auto clean = run(false);
  const auto fuzzed = run(true);
  EXPECT_EQ(std::get<0>(clean), std::get<0>(fuzzed));
  EXPECT_EQ(std::get<1>(clean), std::get<1>(fuzzed));
  EXPECT_EQ(std::get<2>(clean), std::get<2>(fuzzed));
  for (double v : std::get<1>(fuzzed)) EXPECT_TRUE(std::isfinite(v));
}

TEST_F(GpTest, FactorizationFailureSurfaces) {
  const Dataset dup = line({0.0, 0.0, 1.0, 2.0}, {1, 1, 0, 0});
  try {
    nlml(ctx(), dup, Hyperparameters(1, 1, 0), tiles(2));
    FAIL() << "expected FactorizationError";
  } catch (const FactorizationError& e) {
    EXPECT_EQ(e.tile(), 0u);
    EXPECT_EQ(e.pivot(), 1u);
  }
  // The pool stays usable.
  EXPECT_NO_THROW(nlml(ctx(), dup, Hyperparameters(1, 1, 0.1), tiles(2)));
}

TEST_F(GpTest, DimensionMismatch) {
  std::mt19937_64 rng(14);
  const Dataset a = oracle::random_dataset(8, 2, rng);
  const Dataset b = oracle::random_dataset(4, 3, rng);
  EXPECT_THROW(predict(ctx(), a, b, Hyperparameters(1, 1, 0.1)), DimensionError);
  EXPECT_THROW(nlml(ctx(), a, Hyperparameters(1, 1, 0.1), tiles(9)), ConfigError);
}

}  // namespace
}  // namespace gprs::gp
