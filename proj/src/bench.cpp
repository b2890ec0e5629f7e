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

#include "gprs/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "gprs/error.hpp"
#include "gprs/gp.hpp"
#include "gprs/simulator.hpp"

namespace gprs::bench {

Experiment parse_experiment(std::string_view name) {
  if (name == "opt") return Experiment::opt;
  if (name == "pred_full") return Experiment::pred_full;
  throw ConfigError("unknown experiment '" + std::string(name) + "' (expected opt|pred_full)");
}

std::string_view to_string(Experiment e) noexcept {
  return e == Experiment::opt ? "opt" : "pred_full";
}

std::string_view csv_header() noexcept {
  return "experiment,n_train,n_test,tiles,workers,backend,rep,wall_seconds,tasks";
}

std::string to_csv_row(const BenchRecord& r) {
  char secs[40];
  std::snprintf(secs, sizeof secs, "%.17g", r.wall_seconds);
  return std::string(to_string(r.experiment)) + "," + std::to_string(r.n_train) + "," +
         std::to_string(r.n_test) + "," + std::to_string(r.tiles) + "," +
         std::to_string(r.workers) + "," + std::string(blas::to_string(r.backend)) + "," +
         std::to_string(r.rep) + "," + secs + "," + std::to_string(r.tasks);
}

namespace {

template <class T>
T parse_integer(std::string_view field, std::size_t line, const char* name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  return value;
}

}  // namespace

BenchRecord parse_csv_row(std::string_view row, std::size_t line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = row.find(',', start);
    fields.push_back(row.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                       : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 9)
    throw ParseError(line, "expected 9 CSV fields, got " + std::to_string(fields.size()));
  BenchRecord r;
  try {
    r.experiment = parse_experiment(fields[0]);
    r.backend = blas::parse_backend(fields[5]);
  } catch (const ConfigError& e) {
    throw ParseError(line, e.what());
  }
  r.n_train = parse_integer<std::size_t>(fields[1], line, "n_train");
  r.n_test = parse_integer<std::size_t>(fields[2], line, "n_test");
  r.tiles = parse_integer<std::size_t>(fields[3], line, "tiles");
  r.workers = parse_integer<std::size_t>(fields[4], line, "workers");
  r.rep = parse_integer<std::size_t>(fields[6], line, "rep");
  const std::string secs(fields[7]);
  char* end = nullptr;
  r.wall_seconds = std::strtod(secs.c_str(), &end);
  if (secs.empty() || end != secs.c_str() + secs.size())
    throw ParseError(line, "bad wall_seconds '" + secs + "'");
  r.tasks = parse_integer<std::uint64_t>(fields[8], line, "tasks");
  return r;
}

void write_csv(std::ostream& out, std::span<const BenchRecord> records) {
  out << csv_header() << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

std::vector<BenchRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != csv_header())
    throw ParseError(1, "missing or unexpected CSV header");
  std::vector<BenchRecord> out;
  std::size_t no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    out.push_back(parse_csv_row(line, no));
  }
  return out;
}

double student_t_975(std::size_t dof) {
  if (dof == 0) throw ConfigError("student_t_975: need at least one degree of freedom");
  const boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

ScalingSummary summarize(std::span<const BenchRecord> records) {
  if (records.empty()) throw ConfigError("summarize: no records");
  using Key = std::tuple<Experiment, std::size_t, std::size_t, std::size_t, blas::BackendId,
                         std::size_t>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : records)
    groups[{r.experiment, r.n_train, r.n_test, r.tiles, r.backend, r.workers}].push_back(
        r.wall_seconds);

  ScalingSummary summary;
  for (auto& [key, samples] : groups) {
    // Sorting first makes the sums independent of record order.
    std::sort(samples.begin(), samples.end());
    SummaryRow row;
    std::tie(row.experiment, row.n_train, row.n_test, row.tiles, row.backend, row.workers) = key;
    row.samples = samples.size();
    double sum = 0.0;
    for (double s : samples) sum += s;
    const auto n = static_cast<double>(samples.size());
    row.mean = sum / n;
    if (samples.size() > 1) {
      double ss = 0.0;
      for (double s : samples) ss += (s - row.mean) * (s - row.mean);
      const double sd = std::sqrt(ss / (n - 1.0));
      row.ci95 = student_t_975(samples.size() - 1) * sd / std::sqrt(n);
    }
    summary.rows.push_back(row);
  }

  for (auto& row : summary.rows) {
    const auto base = std::find_if(summary.rows.begin(), summary.rows.end(), [&](const SummaryRow& o) {
      return o.workers == 1 && o.experiment == row.experiment && o.n_train == row.n_train &&
             o.n_test == row.n_test && o.tiles == row.tiles && o.backend == row.backend;
    });
    if (base != summary.rows.end()) {
      row.speedup = base->mean / row.mean;
      row.efficiency = *row.speedup / static_cast<double>(row.workers);
    }
  }
  return summary;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

std::string fmt(double v) { return fmt_opt(v); }

void write_gnuplot(const std::filesystem::path& script, const std::filesystem::path& data,
                   PlotKind kind) {
  std::ofstream gp(script);
  if (!gp) throw IoError("cannot write '" + script.string() + "'");
  gp << "set terminal pngcairo size 800,600\n";
  gp << "set output '" << data.stem().string() << ".png'\n";
  gp << "set datafile missing 'NA'\n";
  if (kind == PlotKind::strong_scaling) {
    gp << "set logscale x 2\nset logscale y\n";
    gp << "set xlabel 'workers'\nset ylabel 'runtime [s]'\n";
  } else {
    gp << "set logscale xy\n";
    gp << "set xlabel 'problem size N'\nset ylabel 'runtime [s]'\n";
  }
  gp << "plot '" << data.filename().string() << "' using 1:2:3 with yerrorlines title '"
     << data.stem().string() << "'\n";
}

}  // namespace

std::vector<std::filesystem::path> emit_plotdata(const ScalingSummary& summary,
                                                 const std::filesystem::path& dir, PlotKind kind) {
  if (summary.rows.empty()) throw ConfigError("emit_plotdata: empty summary");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  // One series per figure analog.
  std::map<std::string, std::vector<const SummaryRow*>> series;
  for (const auto& row : summary.rows) {
    std::string name;
    if (kind == PlotKind::strong_scaling) {
      name = "strong_" + std::string(to_string(row.experiment)) + "_" +
             std::string(blas::to_string(row.backend)) + "_n" + std::to_string(row.n_train) +
             "_t" + std::to_string(row.tiles);
    } else {
      name = "size_" + std::string(to_string(row.experiment)) + "_" +
             std::string(blas::to_string(row.backend)) + "_w" + std::to_string(row.workers);
    }
    series[name].push_back(&row);
  }

  std::vector<std::filesystem::path> written;
  for (auto& [name, rows] : series) {
    const auto path = dir / (name + ".dat");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    if (kind == PlotKind::strong_scaling) {
      std::sort(rows.begin(), rows.end(),
                [](const SummaryRow* a, const SummaryRow* b) { return a->workers < b->workers; });
      out << "# workers mean ci95 speedup efficiency\n";
      for (const auto* r : rows)
        out << r->workers << ' ' << fmt(r->mean) << ' ' << fmt_opt(r->ci95) << ' '
            << fmt_opt(r->speedup) << ' ' << fmt_opt(r->efficiency) << '\n';
    } else {
      std::sort(rows.begin(), rows.end(),
                [](const SummaryRow* a, const SummaryRow* b) { return a->n_train < b->n_train; });
      out << "# n mean ci95 tiles\n";
      for (const auto* r : rows)
        out << r->n_train << ' ' << fmt(r->mean) << ' ' << fmt_opt(r->ci95) << ' ' << r->tiles
            << '\n';
    }
    if (!out) throw IoError("write to '" + path.string() + "' failed");
    write_gnuplot(dir / (name + ".gp"), path, kind);
    written.push_back(path);
  }
  return written;
}

std::size_t TilesSchedule::tiles_for(std::size_t n) const noexcept {
  for (const auto& [bound, tiles] : steps)
    if (n <= bound) return tiles;
  return tiles_above;
}

TilesSchedule TilesSchedule::parse(std::string_view text) {
  TilesSchedule s;
  s.steps.clear();
  auto parse_num = [&](std::string_view v) {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || out == 0)
      throw ConfigError("bad tiles schedule '" + std::string(text) + "'");
    return out;
  };
  std::size_t start = 0;
  bool have_tail = false;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (have_tail) throw ConfigError("bad tiles schedule '" + std::string(text) + "'");
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos) {
      s.tiles_above = parse_num(item);
      have_tail = true;
    } else {
      const std::size_t bound = parse_num(item.substr(0, colon));
      if (!s.steps.empty() && bound <= s.steps.back().first)
        throw ConfigError("tiles schedule bounds must increase");
      s.steps.emplace_back(bound, parse_num(item.substr(colon + 1)));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (!have_tail) throw ConfigError("tiles schedule needs a trailing tile count");
  return s;
}

std::pair<Dataset, Dataset> generate_train_test(std::size_t n_train, std::size_t n_test,
                                                std::uint64_t seed) {
  constexpr std::size_t window = 3;
  constexpr std::size_t stride = 10;
  sim::MsdConfig cfg;
  cfg.seed = seed;
  cfg.n_steps = sim::steps_for_samples(n_train + n_test, window, stride);
  const auto data = sim::make_dataset(sim::simulate(cfg), window, stride);
  return sim::split(data.dataset, n_train);
}

namespace {

/// Runs one repetition of the experiment; returns the tasks it executed.
std::uint64_t run_once(gp::Context ctx, const Dataset& train, const Dataset& test,
                       const RunConfig& cfg, std::size_t tiles) {
  const std::uint64_t before = ctx.runtime.tasks_executed();
  gp::Options opts;
  opts.tiles_per_dim = tiles;
  if (cfg.experiment == Experiment::opt) {
    gp::optimize(ctx, train, cfg.theta, cfg.opt_iters, gp::AdamRates{}, opts);
  } else {
    gp::predict_full_cov(ctx, train, test, cfg.theta, opts);
  }
  return ctx.runtime.tasks_executed() - before;
}

void append_trace(const runtime::Runtime& rt, const std::filesystem::path& path,
                  std::size_t workers, std::size_t n, std::size_t tiles) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot write trace '" + path.string() + "'");
  out << "# workers=" << workers << " n=" << n << " tiles=" << tiles << '\n';
  auto records = rt.trace();
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  for (const auto& r : records) out << runtime::format_trace_line(r) << '\n';
}

std::vector<BenchRecord> time_config(const Dataset& train, const Dataset& test,
                                     std::size_t workers, std::size_t tiles, const RunConfig& cfg,
                                     const blas::Backend& backend) {
  runtime::Runtime rt;
  rt.start(runtime::PoolConfig{workers, cfg.trace_path.has_value()});
  gp::Context ctx{rt, backend};
  if (cfg.warmup) run_once(ctx, train, test, cfg, tiles);
  std::vector<BenchRecord> out;
  for (std::size_t rep = 1; rep <= cfg.reps; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t tasks = run_once(ctx, train, test, cfg, tiles);
    const auto t1 = std::chrono::steady_clock::now();
    BenchRecord r;
    r.experiment = cfg.experiment;
    r.n_train = train.n();
    r.n_test = cfg.experiment == Experiment::opt ? 0 : test.n();
    r.tiles = tiles;
    r.workers = workers;
    r.backend = cfg.backend;
    r.rep = rep;
    r.wall_seconds = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
    r.tasks = tasks;
    out.push_back(r);
  }
  if (cfg.trace_path) append_trace(rt, *cfg.trace_path, workers, train.n(), tiles);
  rt.shutdown();
  return out;
}

}  // namespace

std::vector<BenchRecord> run_strong_scaling(const Dataset& train, const Dataset& test,
                                            std::span<const std::size_t> workers,
                                            const RunConfig& cfg) {
  if (workers.empty()) throw ConfigError("strong scaling: worker list is empty");
  if (cfg.reps == 0) throw ConfigError("strong scaling: reps must be at least 1");
  const auto backend = blas::make_backend(cfg.backend);
  std::vector<BenchRecord> records;
  for (std::size_t w : workers) {
    auto part = time_config(train, test, w, cfg.tiles, cfg, *backend);
    records.insert(records.end(), part.begin(), part.end());
  }
  return records;
}

std::vector<BenchRecord> run_size_scaling(std::span<const std::size_t> sizes,
                                          const TilesSchedule& schedule, std::size_t workers,
                                          const RunConfig& cfg, std::uint64_t seed) {
  if (sizes.empty()) throw ConfigError("size scaling: size list is empty");
  if (cfg.reps == 0) throw ConfigError("size scaling: reps must be at least 1");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const std::size_t n = sizes[i];
    if (n == 0 || (n & (n - 1)) != 0) throw ConfigError("size scaling: sizes must be powers of two");
    if (i > 0 && n <= sizes[i - 1]) throw ConfigError("size scaling: sizes must ascend");
  }
  const auto backend = blas::make_backend(cfg.backend);
  std::vector<BenchRecord> records;
  for (std::size_t n : sizes) {
    const auto [train, test] = generate_train_test(n, n, seed);
    const std::size_t tiles = std::min(schedule.tiles_for(n), n);
    auto part = time_config(train, test, workers, tiles, cfg, *backend);
    records.insert(records.end(), part.begin(), part.end());
  }
  return records;
}

}  // namespace gprs::bench
