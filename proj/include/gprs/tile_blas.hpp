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

#include <memory>
#include <string_view>

#include "gprs/tiled_matrix.hpp"

/// Sequential dense kernels on single tiles. These are the leaf computations
/// of every task; all parallelism lives between tasks, never inside a kernel.
///
/// Every kernel reads and writes only the valid block of its tiles
/// (`rows() x cols()`); the padding of the first tile argument is carried over
/// to the result unchanged. Kernels take their inputs by const reference and
/// return a fresh tile.
namespace gprs::blas {

enum class BackendId { reference, system };

/// "reference" or "system"; throws ConfigError otherwise.
BackendId parse_backend(std::string_view name);
std::string_view to_string(BackendId id) noexcept;

/// True when the library was built against an optimized host BLAS.
bool system_backend_available() noexcept;

enum class Transpose { no, yes };

class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendId id() const noexcept = 0;

  /// Lower Cholesky factor L with L * L^T = a; only the lower triangle of `a`
  /// is read, the strict upper triangle of the result is zero.
  /// Throws FactorizationError (carrying the pivot row) if `a` is not SPD.
  Tile potrf(const Tile& a) const;

  /// X with X * l^T = b (panel update of the tiled factorization).
  Tile trsm_right_lower_transpose(const Tile& l, const Tile& b) const;

  /// c - a * a^T. The lower triangle is computed and mirrored to the upper one.
  Tile syrk_lower(const Tile& c, const Tile& a) const;

  /// c - a * b^T
  Tile gemm_update(const Tile& c, const Tile& a, const Tile& b) const;

  /// Solves l * z = x.
  Segment trsv_forward(const Tile& l, const Segment& x) const;
  /// Solves l^T * z = x.
  Segment trsv_backward(const Tile& l, const Segment& x) const;

  /// y + sign * op(a) * x
  Segment gemv_update(const Segment& y, const Tile& a, const Segment& x, Transpose trans,
                      double sign) const;

  double dot(const Segment& u, const Segment& v) const;

  /// c + sign * op(a) * op(b)
  Tile gemm_full(const Tile& c, const Tile& a, const Tile& b, Transpose trans_a, Transpose trans_b,
                 double sign) const;

 protected:
  // Shapes are validated before these are called.
  virtual void do_potrf(Tile& a) const = 0;
  virtual void do_trsm(const Tile& l, Tile& b) const = 0;
  virtual void do_syrk(Tile& c, const Tile& a) const = 0;
  virtual void do_gemm(Tile& c, const Tile& a, const Tile& b, Transpose ta, Transpose tb,
                       double alpha) const = 0;
  virtual void do_trsv(const Tile& l, Segment& x, Transpose trans) const = 0;
  virtual void do_gemv(Segment& y, const Tile& a, const Segment& x, Transpose trans,
                       double alpha) const = 0;
  virtual double do_dot(const Segment& u, const Segment& v) const = 0;
};

/// Plain loops with a fixed accumulation order: bitwise reproducible and
/// available on every host.
class ReferenceBackend final : public Backend {
 public:
  BackendId id() const noexcept override { return BackendId::reference; }

 protected:
  void do_potrf(Tile& a) const override;
  void do_trsm(const Tile& l, Tile& b) const override;
  void do_syrk(Tile& c, const Tile& a) const override;
  void do_gemm(Tile& c, const Tile& a, const Tile& b, Transpose ta, Transpose tb,
               double alpha) const override;
  void do_trsv(const Tile& l, Segment& x, Transpose trans) const override;
  void do_gemv(Segment& y, const Tile& a, const Segment& x, Transpose trans,
               double alpha) const override;
  double do_dot(const Segment& u, const Segment& v) const override;
};

/// Throws ConfigError if `id` is `system` and no host BLAS was built in.
std::unique_ptr<Backend> make_backend(BackendId id);

}  // namespace gprs::blas
