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

#include "gprs/error.hpp"
#include "gprs/tile_blas.hpp"

// Loop orders below are part of the contract: results must not depend on the
// host or the compiler, so every sum runs in ascending index order.

namespace gprs::blas {

void ReferenceBackend::do_potrf(Tile& a) const {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
    if (!(diag > 0.0)) throw FactorizationError(j);
    const double ljj = std::sqrt(diag);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double sum = a(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= a(i, k) * a(j, k);
      a(i, j) = sum / ljj;
    }
  }
}

void ReferenceBackend::do_trsm(const Tile& l, Tile& b) const {
  // Row r of X solves L * x_r^T = b_r^T.
  const std::size_t n = l.rows();
  for (std::size_t r = 0; r < b.rows(); ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = b(r, j);
      for (std::size_t k = 0; k < j; ++k) sum -= l(j, k) * b(r, k);
      b(r, j) = sum / l(j, j);
    }
  }
}

void ReferenceBackend::do_syrk(Tile& c, const Tile& a) const {
  const std::size_t n = c.rows();
  const std::size_t depth = a.cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < depth; ++k) acc += a(i, k) * a(j, k);
      c(i, j) -= acc;
    }
  }
}

void ReferenceBackend::do_gemm(Tile& c, const Tile& a, const Tile& b, Transpose ta, Transpose tb,
                               double alpha) const {
  const bool at = ta == Transpose::yes;
  const bool bt = tb == Transpose::yes;
  const std::size_t depth = at ? a.rows() : a.cols();
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < depth; ++k)
        acc += (at ? a(k, i) : a(i, k)) * (bt ? b(j, k) : b(k, j));
      c(i, j) += alpha * acc;
    }
  }
}

void ReferenceBackend::do_trsv(const Tile& l, Segment& x, Transpose trans) const {
  const std::size_t n = l.rows();
  if (trans == Transpose::no) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = x[i];
      for (std::size_t k = 0; k < i; ++k) sum -= l(i, k) * x[k];
      x[i] = sum / l(i, i);
    }
  } else {
    for (std::size_t i = n; i-- > 0;) {
      double sum = x[i];
      for (std::size_t k = i + 1; k < n; ++k) sum -= l(k, i) * x[k];
      x[i] = sum / l(i, i);
    }
  }
}

void ReferenceBackend::do_gemv(Segment& y, const Tile& a, const Segment& x, Transpose trans,
                               double alpha) const {
  if (trans == Transpose::no) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
      y[i] += alpha * acc;
    }
  } else {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) acc += a(i, j) * x[i];
      y[j] += alpha * acc;
    }
  }
}

double ReferenceBackend::do_dot(const Segment& u, const Segment& v) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

}  // namespace gprs::blas
