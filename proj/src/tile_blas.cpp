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

#include "gprs/tile_blas.hpp"

#include <string>

#include "gprs/error.hpp"

namespace gprs::blas {

#ifdef GPRS_HAVE_SYSTEM_BLAS
std::unique_ptr<Backend> make_system_backend();  // tile_blas_system.cpp
#endif

BackendId parse_backend(std::string_view name) {
  if (name == "reference") return BackendId::reference;
  if (name == "system") return BackendId::system;
  throw ConfigError("unknown BLAS backend '" + std::string(name) +
                    "' (expected reference|system)");
}

std::string_view to_string(BackendId id) noexcept {
  return id == BackendId::reference ? "reference" : "system";
}

bool system_backend_available() noexcept {
#ifdef GPRS_HAVE_SYSTEM_BLAS
  return true;
#else
  return false;
#endif
}

std::unique_ptr<Backend> make_backend(BackendId id) {
  if (id == BackendId::reference) return std::make_unique<ReferenceBackend>();
#ifdef GPRS_HAVE_SYSTEM_BLAS
  return make_system_backend();
#else
  throw ConfigError("system BLAS backend not available in this build");
#endif
}

namespace {

std::string shape(const Tile& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw DimensionError(std::string(op) + ": shape mismatch (" + detail + ")");
}

void require_nonsingular(const Tile& l, const char* op) {
  for (std::size_t i = 0; i < l.rows(); ++i)
    if (l(i, i) == 0.0)
      throw SingularError(std::string(op) + ": zero on the diagonal at row " + std::to_string(i));
}

std::size_t op_rows(const Tile& t, Transpose tr) { return tr == Transpose::no ? t.rows() : t.cols(); }
std::size_t op_cols(const Tile& t, Transpose tr) { return tr == Transpose::no ? t.cols() : t.rows(); }

}  // namespace

Tile Backend::potrf(const Tile& a) const {
  require(a.rows() == a.cols(), "potrf", shape(a));
  Tile out = a;
  do_potrf(out);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = r + 1; c < out.cols(); ++c) out(r, c) = 0.0;
  return out;
}

Tile Backend::trsm_right_lower_transpose(const Tile& l, const Tile& b) const {
  require(l.rows() == l.cols() && b.cols() == l.rows(), "trsm", shape(l) + ", " + shape(b));
  require_nonsingular(l, "trsm");
  Tile out = b;
  do_trsm(l, out);
  return out;
}

Tile Backend::syrk_lower(const Tile& c, const Tile& a) const {
  require(c.rows() == c.cols() && a.rows() == c.rows(), "syrk", shape(c) + ", " + shape(a));
  Tile out = c;
  do_syrk(out, a);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t col = r + 1; col < out.cols(); ++col) out(r, col) = out(col, r);
  return out;
}

Tile Backend::gemm_update(const Tile& c, const Tile& a, const Tile& b) const {
  require(a.rows() == c.rows() && b.rows() == c.cols() && a.cols() == b.cols(), "gemm_update",
          shape(c) + ", " + shape(a) + ", " + shape(b));
  Tile out = c;
  do_gemm(out, a, b, Transpose::no, Transpose::yes, -1.0);
  return out;
}

Tile Backend::gemm_full(const Tile& c, const Tile& a, const Tile& b, Transpose trans_a,
                        Transpose trans_b, double sign) const {
  require(op_rows(a, trans_a) == c.rows() && op_cols(b, trans_b) == c.cols() &&
              op_cols(a, trans_a) == op_rows(b, trans_b),
          "gemm_full", shape(c) + ", " + shape(a) + ", " + shape(b));
  Tile out = c;
  do_gemm(out, a, b, trans_a, trans_b, sign);
  return out;
}

Segment Backend::trsv_forward(const Tile& l, const Segment& x) const {
  require(l.rows() == l.cols() && x.size() == l.rows(), "trsv", shape(l));
  require_nonsingular(l, "trsv");
  Segment out = x;
  do_trsv(l, out, Transpose::no);
  return out;
}

Segment Backend::trsv_backward(const Tile& l, const Segment& x) const {
  require(l.rows() == l.cols() && x.size() == l.rows(), "trsv", shape(l));
  require_nonsingular(l, "trsv");
  Segment out = x;
  do_trsv(l, out, Transpose::yes);
  return out;
}

Segment Backend::gemv_update(const Segment& y, const Tile& a, const Segment& x, Transpose trans,
                             double sign) const {
  require(op_rows(a, trans) == y.size() && op_cols(a, trans) == x.size(), "gemv_update",
          shape(a) + ", x=" + std::to_string(x.size()) + ", y=" + std::to_string(y.size()));
  Segment out = y;
  do_gemv(out, a, x, trans, sign);
  return out;
}

double Backend::dot(const Segment& u, const Segment& v) const {
  require(u.size() == v.size(), "dot", std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  return do_dot(u, v);
}

}  // namespace gprs::blas
