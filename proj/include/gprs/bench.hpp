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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gprs/kernels.hpp"
#include "gprs/tile_blas.hpp"

/// Benchmark records, statistics and the timed runners behind the CLI.
namespace gprs::bench {

enum class Experiment { opt, pred_full };

Experiment parse_experiment(std::string_view name);
std::string_view to_string(Experiment e) noexcept;

/// One timed repetition.
struct BenchRecord {
  Experiment experiment = Experiment::pred_full;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t tiles = 0;
  std::size_t workers = 0;
  blas::BackendId backend = blas::BackendId::reference;
  std::size_t rep = 0;
  double wall_seconds = 0.0;
  std::uint64_t tasks = 0;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

/// "experiment,n_train,n_test,tiles,workers,backend,rep,wall_seconds,tasks"
std::string_view csv_header() noexcept;
/// Wall time is written with 17 significant digits so rows parse back exactly.
std::string to_csv_row(const BenchRecord& r);
/// Throws ParseError (with `line`) on malformed rows.
BenchRecord parse_csv_row(std::string_view row, std::size_t line);
void write_csv(std::ostream& out, std::span<const BenchRecord> records);
std::vector<BenchRecord> read_csv(std::istream& in);

/// Two-sided 95% Student-t quantile t_{0.975, dof}; dof >= 1.
double student_t_975(std::size_t dof);

struct SummaryRow {
  Experiment experiment = Experiment::pred_full;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t tiles = 0;
  blas::BackendId backend = blas::BackendId::reference;
  std::size_t workers = 0;
  std::size_t samples = 0;
  double mean = 0.0;
  /// Half-width t * s / sqrt(n); absent for a single sample.
  std::optional<double> ci95;
  /// Relative to the 1-worker group of the same configuration, when present.
  std::optional<double> speedup;
  std::optional<double> efficiency;
};

struct ScalingSummary {
  /// Sorted by (experiment, n_train, n_test, tiles, backend, workers).
  std::vector<SummaryRow> rows;
};

/// Groups records by configuration. Independent of input order. Throws
/// ConfigError on an empty input.
ScalingSummary summarize(std::span<const BenchRecord> records);

/// Writes one whitespace-separated data file per figure analog plus a gnuplot
/// script next to it. Strong-scaling files (`strong_*.dat`) hold
/// `workers mean ci95 speedup efficiency`; size-scaling files (`size_*.dat`)
/// hold `n mean ci95 tiles` sorted by n and are plotted log-log. Returns the
/// data files written.
enum class PlotKind { strong_scaling, size_scaling };
std::vector<std::filesystem::path> emit_plotdata(const ScalingSummary& summary,
                                                 const std::filesystem::path& dir, PlotKind kind);

/// Maps a problem size to tiles per dimension: the first step whose bound is
/// >= n wins, sizes beyond the last bound use `tiles_above`.
struct TilesSchedule {
  std::vector<std::pair<std::size_t, std::size_t>> steps{{256, 1}, {2048, 4}};
  std::size_t tiles_above = 16;

  std::size_t tiles_for(std::size_t n) const noexcept;
  /// "256:1,2048:4,16" (bound:tiles pairs, then the trailing tile count).
  static TilesSchedule parse(std::string_view text);
};

struct RunConfig {
  Experiment experiment = Experiment::pred_full;
  std::size_t tiles = 16;
  std::size_t reps = 10;
  blas::BackendId backend = blas::BackendId::reference;
  /// Adam iterations per timed repetition of the optimization experiment.
  std::size_t opt_iters = 1;
  /// One untimed run per configuration before the timed repetitions.
  bool warmup = true;
  Hyperparameters theta{1.0, 1.0, 0.1};
  /// When set, task traces are appended here (one block per pool).
  std::optional<std::filesystem::path> trace_path;
};

/// For each worker count: start a pool, warm up, time `reps` repetitions of
/// the pipeline (assembly included; I/O and pool startup excluded), shut down.
std::vector<BenchRecord> run_strong_scaling(const Dataset& train, const Dataset& test,
                                            std::span<const std::size_t> workers,
                                            const RunConfig& cfg);

/// For each size n: generate n training and n test samples with the default
/// simulator (fixed seed), pick tiles from the schedule and time `reps` runs.
std::vector<BenchRecord> run_size_scaling(std::span<const std::size_t> sizes,
                                          const TilesSchedule& schedule, std::size_t workers,
                                          const RunConfig& cfg, std::uint64_t seed);

/// Training and test sets of the given sizes from the default simulator.
std::pair<Dataset, Dataset> generate_train_test(std::size_t n_train, std::size_t n_test,
                                                std::uint64_t seed);

}  // namespace gprs::bench
