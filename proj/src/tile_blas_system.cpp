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

#include <cblas.h>

#include <algorithm>

#include <memory>

#include "gprs/error.hpp"
#include "gprs/tile_blas.hpp"

extern "C" void dpotrf_(const char* uplo, const int* n, double* a, const int* lda, int* info);

namespace gprs::blas {

namespace {

// OpenBLAS 0.3.20 computes wrong results in its AVX-512 dtrsm kernel once the
// triangle reaches 32, and dpotrf inherits that. Triangles are split so the
// library only ever sees blocks below that size.
constexpr std::size_t kBlock = 16;

int as_int(std::size_t v) { return static_cast<int>(v); }

// Solves X * L^T = B in place for an m x k row-major B.
void trsm_rlt(std::size_t m, std::size_t k, const double* l, int ldl, double* b, int ldb) {
  for (std::size_t j = 0; j < k; j += kBlock) {
    const std::size_t nb = std::min(kBlock, k - j);
    if (j > 0)
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, as_int(m), as_int(nb), as_int(j), -1.0,
                  b, ldb, l + j * ldl, ldl, 1.0, b + j, ldb);
    cblas_dtrsm(CblasRowMajor, CblasRight, CblasLower, CblasTrans, CblasNonUnit, as_int(m),
                as_int(nb), 1.0, l + j * ldl + j, ldl, b + j, ldb);
  }
}

CBLAS_TRANSPOSE cblas_trans(Transpose t) { return t == Transpose::yes ? CblasTrans : CblasNoTrans; }

/// OpenBLAS through its CBLAS interface and the Fortran LAPACK symbol. The
/// library's own threading is pinned to one thread so each call stays sequential.
class SystemBackend final : public Backend {
 public:
  SystemBackend() { openblas_set_num_threads(1); }

  BackendId id() const noexcept override { return BackendId::system; }

 protected:
  void do_potrf(Tile& a) const override {
    const std::size_t n = a.rows();
    const int lda = as_int(a.ld());
    for (std::size_t k = 0; k < n; k += kBlock) {
      const std::size_t nb = std::min(kBlock, n - k);
      const std::size_t rest = n - k - nb;
      double* akk = a.data() + k * a.ld() + k;
      // A row-major lower triangle is a column-major upper triangle.
      const int m = as_int(nb);
      int info = 0;
      const char uplo = 'U';
      dpotrf_(&uplo, &m, akk, &lda, &info);
      if (info > 0) throw FactorizationError(k + static_cast<std::size_t>(info - 1));
      if (info < 0) throw Error("dpotrf: invalid argument " + std::to_string(-info));
      if (rest == 0) break;
      double* below = akk + nb * a.ld();
      trsm_rlt(rest, nb, akk, lda, below, lda);
      cblas_dsyrk(CblasRowMajor, CblasLower, CblasNoTrans, as_int(rest), m, -1.0, below, lda, 1.0,
                  below + nb, lda);
    }
  }

  void do_trsm(const Tile& l, Tile& b) const override {
    if (b.rows() == 0 || b.cols() == 0) return;
    trsm_rlt(b.rows(), b.cols(), l.data(), as_int(l.ld()), b.data(), as_int(b.ld()));
  }

  void do_syrk(Tile& c, const Tile& a) const override {
    if (c.rows() == 0) return;
    cblas_dsyrk(CblasRowMajor, CblasLower, CblasNoTrans, as_int(c.rows()), as_int(a.cols()), -1.0,
                a.data(), as_int(a.ld()), 1.0, c.data(), as_int(c.ld()));
  }

  void do_gemm(Tile& c, const Tile& a, const Tile& b, Transpose ta, Transpose tb,
               double alpha) const override {
    if (c.rows() == 0 || c.cols() == 0) return;
    const std::size_t depth = ta == Transpose::yes ? a.rows() : a.cols();
    cblas_dgemm(CblasRowMajor, cblas_trans(ta), cblas_trans(tb), as_int(c.rows()),
                as_int(c.cols()), as_int(depth), alpha, a.data(), as_int(a.ld()), b.data(),
                as_int(b.ld()), 1.0, c.data(), as_int(c.ld()));
  }

  void do_trsv(const Tile& l, Segment& x, Transpose trans) const override {
    if (l.rows() == 0) return;
    cblas_dtrsv(CblasRowMajor, CblasLower, cblas_trans(trans), CblasNonUnit, as_int(l.rows()),
                l.data(), as_int(l.ld()), x.data(), 1);
  }

  void do_gemv(Segment& y, const Tile& a, const Segment& x, Transpose trans,
               double alpha) const override {
    if (a.rows() == 0 || a.cols() == 0) return;
    cblas_dgemv(CblasRowMajor, cblas_trans(trans), as_int(a.rows()), as_int(a.cols()), alpha,
                a.data(), as_int(a.ld()), x.data(), 1, 1.0, y.data(), 1);
  }

  double do_dot(const Segment& u, const Segment& v) const override {
    if (u.size() == 0) return 0.0;
    return cblas_ddot(as_int(u.size()), u.data(), 1, v.data(), 1);
  }
};

}  // namespace

std::unique_ptr<Backend> make_system_backend() { return std::make_unique<SystemBackend>(); }

}  // namespace gprs::blas
