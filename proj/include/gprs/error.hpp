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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gprs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument shapes or indices (dimension mismatch, out-of-range tile).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (non-positive hyperparameters, bad tile counts).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A Cholesky pivot was not positive: the input matrix is not SPD.
///
/// `pivot()` is the local row inside the failing tile, `tile()` the diagonal
/// tile index of a tiled factorization and `iteration()` the optimizer
/// iteration; the latter two are `npos` when not applicable.
class FactorizationError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit FactorizationError(std::size_t pivot, std::size_t tile = npos,
                              std::size_t iteration = npos)
      : Error(describe(pivot, tile, iteration)), pivot_(pivot), tile_(tile), iteration_(iteration) {}

  std::size_t pivot() const noexcept { return pivot_; }
  std::size_t tile() const noexcept { return tile_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  static std::string describe(std::size_t pivot, std::size_t tile, std::size_t iteration) {
    std::string msg = "cholesky: non-positive pivot at row " + std::to_string(pivot);
    if (tile != npos) msg += " of diagonal tile " + std::to_string(tile);
    if (iteration != npos) msg += " in optimizer iteration " + std::to_string(iteration);
    return msg + " (matrix is not positive definite)";
  }

  std::size_t pivot_;
  std::size_t tile_;
  std::size_t iteration_;
};

/// Zero on the diagonal of a triangular factor.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// Simulator state left the admissible range.
class InstabilityError : public Error {
 public:
  explicit InstabilityError(std::size_t step)
      : Error("simulation diverged at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Malformed dataset or CSV input; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Misuse of the task runtime (double start, submission after shutdown, ...).
class RuntimeStateError : public Error {
 public:
  using Error::Error;
};

}  // namespace gprs
