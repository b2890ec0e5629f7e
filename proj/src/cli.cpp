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


#include "gprs/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "gprs/bench.hpp"
#include "gprs/error.hpp"
#include "gprs/gp.hpp"
#include "gprs/simulator.hpp"
#include "gprs/task_runtime.hpp"
#include "gprs/tile_blas.hpp"

namespace gprs::cli {
namespace {

std::string default_backend() {
  return blas::system_backend_available() ? "system" : "reference";
}

struct ThetaFlags {
  double length_scale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 0.1;

  void add(CLI::App* cmd) {
    cmd->add_option("--length-scale", length_scale, "Kernel length scale l")
        ->capture_default_str();
    cmd->add_option("--signal-variance", signal_variance, "Signal variance")
        ->capture_default_str();
    cmd->add_option("--noise-variance", noise_variance, "Noise variance")
        ->capture_default_str();
  }
  Hyperparameters get() const { return {length_scale, signal_variance, noise_variance}; }
};

void print_summary(std::ostream& out, const bench::ScalingSummary& s) {
  out << "experiment n_train n_test tiles backend workers reps mean_s ci95_s speedup efficiency\n";
  auto opt = [](const std::optional<double>& v) {
    std::ostringstream o;
    if (v)
      o << std::setprecision(4) << *v;
    else
      o << "NA";
    return o.str();
  };
  for (const auto& r : s.rows) {
    out << bench::to_string(r.experiment) << ' ' << r.n_train << ' ' << r.n_test << ' '
        << r.tiles << ' ' << blas::to_string(r.backend) << ' ' << r.workers << ' ' << r.samples
        << ' ' << std::setprecision(6) << r.mean << ' ' << opt(r.ci95) << ' ' << opt(r.speedup)
        << ' ' << opt(r.efficiency) << '\n';
  }
}

void write_records(const std::string& path, const std::vector<bench::BenchRecord>& records) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  bench::write_csv(f, records);
  if (!f) throw IoError("write to '" + path + "' failed");
}

struct BenchFlags {
  std::string experiment = "pred_full";
  std::size_t reps = 10;
  std::string backend = default_backend();
  std::size_t opt_iters = 1;
  bool no_warmup = false;
  std::string out;
  std::string plot_dir;
  std::string trace;
  ThetaFlags theta;

  void add(CLI::App* cmd) {
    cmd->add_option("--experiment", experiment, "Pipeline to time")
        ->check(CLI::IsMember({"opt", "pred_full"}))
        ->capture_default_str();
    cmd->add_option("--reps", reps, "Timed repetitions per configuration")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--backend,--blas-backend", backend, "Tile kernel backend")
        ->check(CLI::IsMember({"reference", "system"}))
        ->capture_default_str();
    cmd->add_option("--opt-iters", opt_iters, "Adam iterations per repetition (opt experiment)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--no-warmup", no_warmup, "Skip the untimed warm-up run");
    cmd->add_option("--out", out, "CSV file for the per-repetition records");
    cmd->add_option("--plot-dir", plot_dir, "Directory for plot data and gnuplot scripts");
    cmd->add_option("--trace", trace, "Append per-task traces to this file");
    theta.add(cmd);
  }

  bench::RunConfig config(std::size_t tiles) const {
    bench::RunConfig cfg;
    cfg.experiment = bench::parse_experiment(experiment);
    cfg.tiles = tiles;
    cfg.reps = reps;
    cfg.backend = blas::parse_backend(backend);
    cfg.opt_iters = opt_iters;
    cfg.warmup = !no_warmup;
    cfg.theta = theta.get();
    if (!trace.empty()) cfg.trace_path = trace;
    return cfg;
  }

  void emit(std::ostream& out_stream, const std::vector<bench::BenchRecord>& records,
            bench::PlotKind kind) const {
    const auto summary = bench::summarize(records);
    print_summary(out_stream, summary);
    if (!out.empty()) write_records(out, records);
    if (!plot_dir.empty()) {
      for (const auto& p : bench::emit_plotdata(summary, plot_dir, kind))
        out_stream << "wrote " << p.string() << '\n';
    }
  }
};

struct PoolFlags {
  std::size_t workers = std::size_t{std::max(1u, std::thread::hardware_concurrency())};
  std::size_t tiles = 1;
  std::string backend = default_backend();

  void add(CLI::App* cmd) {
    cmd->add_option("--workers", workers, "Worker threads")
        ->envname("GPRS_WORKERS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tiles", tiles, "Tiles per dimension")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--backend,--blas-backend", backend, "Tile kernel backend")
        ->check(CLI::IsMember({"reference", "system"}))
        ->capture_default_str();
  }
};

int classify(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DimensionError*>(&e))
    return usage;
  if (dynamic_cast<const FactorizationError*>(&e) || dynamic_cast<const SingularError*>(&e) ||
      dynamic_cast<const InstabilityError*>(&e))
    return numerical;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e)) return io;
  return 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tiled Gaussian-process regression benchmarks", "gprs"};
  app.require_subcommand(1);
  app.set_config("--config");

  // generate
  auto* gen = app.add_subcommand("generate", "Simulate the mass-spring-damper and write a dataset");
  std::size_t gen_n = 0;
  std::string gen_out;
  std::size_t window = 3;
  std::size_t stride = 10;
  sim::MsdConfig msd;
  gen->add_option("--n", gen_n, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("-o,--out", gen_out, "Output file")->required();
  gen->add_option("--seed", msd.seed, "Force sequence seed")->capture_default_str();
  gen->add_option("--window", window, "Input lags per sample")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--stride", stride, "Steps between samples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--mass", msd.mass)->capture_default_str();
  gen->add_option("--damping", msd.damping)->capture_default_str();
  gen->add_option("--stiffness", msd.stiffness)->capture_default_str();
  gen->add_option("--cubic-stiffness", msd.cubic_stiffness)->capture_default_str();
  gen->add_option("--dt", msd.dt)->capture_default_str();
  gen->add_option("--amplitude", msd.amplitude)->capture_default_str();
  gen->add_option("--hold-steps", msd.hold_steps)->capture_default_str();

  // strong-scaling
  auto* strong = app.add_subcommand("strong-scaling", "Time one problem over several worker counts");
  std::string strong_train;
  std::string strong_test;
  std::size_t strong_n_train = 8192;
  std::size_t strong_n_test = 8192;
  std::uint64_t strong_seed = 42;
  std::vector<std::size_t> strong_workers{1, 2, 4};
  std::size_t strong_tiles = 16;
  BenchFlags strong_flags;
  strong->add_option("--train", strong_train, "Training dataset file");
  strong->add_option("--test", strong_test, "Test dataset file");
  strong->add_option("--n-train", strong_n_train, "Generated training size (no --train)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  strong->add_option("--n-test", strong_n_test, "Generated test size (no --test)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  strong->add_option("--seed", strong_seed, "Seed for generated data")->capture_default_str();
  strong->add_option("--workers", strong_workers, "Worker counts, comma separated")
      ->delimiter(',')
      ->envname("GPRS_WORKERS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  strong->add_option("--tiles", strong_tiles, "Tiles per dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  strong_flags.add(strong);

  // size-scaling
  auto* size = app.add_subcommand("size-scaling", "Time growing problem sizes");
  std::vector<std::size_t> sizes{8, 16, 32, 64, 128, 256, 512, 1024};
  std::string schedule_text = "256:1,2048:4,16";
  std::optional<std::size_t> size_tiles;
  std::size_t size_workers = std::size_t{std::max(1u, std::thread::hardware_concurrency())};
  std::uint64_t size_seed = 42;
  BenchFlags size_flags;
  size->add_option("--sizes", sizes, "Problem sizes, ascending powers of two")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  size->add_option("--tiles-schedule", schedule_text, "bound:tiles,...,tiles_above")
      ->capture_default_str();
  size->add_option("--tiles", size_tiles, "Fixed tiles per dimension (overrides the schedule)")
      ->check(CLI::PositiveNumber);
  size->add_option("--workers", size_workers, "Worker threads")
      ->envname("GPRS_WORKERS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  size->add_option("--seed", size_seed, "Simulator seed")->capture_default_str();
  size_flags.add(size);

  // predict
  auto* pred = app.add_subcommand("predict", "Posterior mean and uncertainty for a test set");
  std::string pred_train;
  std::string pred_test;
  std::string pred_out;
  std::string pred_mode = "diag";
  PoolFlags pred_pool;
  ThetaFlags pred_theta;
  pred->add_option("--train", pred_train, "Training dataset file")->required();
  pred->add_option("--test", pred_test, "Test dataset file")->required();
  pred->add_option("--uncertainty", pred_mode, "none | diag | full")
      ->check(CLI::IsMember({"none", "diag", "full"}))
      ->capture_default_str();
  pred->add_option("--out", pred_out, "CSV output (default: stdout)");
  pred_pool.add(pred);
  pred_theta.add(pred);

  // optimize
  auto* optim = app.add_subcommand("optimize", "Fit hyperparameters with Adam");
  std::string opt_train;
  std::size_t opt_iters = 20;
  gp::AdamRates rates;
  PoolFlags opt_pool;
  ThetaFlags opt_theta;
  optim->add_option("--train", opt_train, "Training dataset file")->required();
  optim->add_option("--opt-iters,--iters", opt_iters, "Adam iterations")->capture_default_str();
  optim->add_option("--learning-rate", rates.learning_rate)->capture_default_str();
  opt_pool.add(optim);
  opt_theta.add(optim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (gen->parsed()) {
      msd.n_steps = sim::steps_for_samples(gen_n, window, stride);
      const auto data = sim::make_dataset(sim::simulate(msd), window, stride);
      sim::save_dataset(data.dataset, gen_out);
      out << "wrote " << gen_out << ": N=" << data.dataset.n() << " D=" << data.dataset.d()
          << '\n';
      out << std::setprecision(6);
      for (std::size_t c = 0; c < data.features.mean.size(); ++c)
        out << "feature " << c << ": mean=" << data.features.mean[c]
            << " scale=" << data.features.scale[c] << '\n';
      out << "target: mean=" << data.targets.mean[0] << " scale=" << data.targets.scale[0]
          << '\n';
    } else if (strong->parsed()) {
      Dataset train;
      Dataset test;
      if (strong_train.empty() != strong_test.empty())
        throw ConfigError("--train and --test must be given together");
      if (!strong_train.empty()) {
        train = sim::load_dataset(strong_train);
        test = sim::load_dataset(strong_test);
      } else {
        std::tie(train, test) = bench::generate_train_test(strong_n_train, strong_n_test, strong_seed);
      }
      const auto records =
          bench::run_strong_scaling(train, test, strong_workers, strong_flags.config(strong_tiles));
      strong_flags.emit(out, records, bench::PlotKind::strong_scaling);
    } else if (size->parsed()) {
      auto schedule = bench::TilesSchedule::parse(schedule_text);
      if (size_tiles) {
        schedule.steps.clear();
        schedule.tiles_above = *size_tiles;
      }
      const auto records = bench::run_size_scaling(sizes, schedule, size_workers,
                                                   size_flags.config(0), size_seed);
      size_flags.emit(out, records, bench::PlotKind::size_scaling);
    } else if (pred->parsed()) {
      const Dataset train = sim::load_dataset(pred_train);
      const Dataset test = sim::load_dataset(pred_test);
      const auto backend = blas::make_backend(blas::parse_backend(pred_pool.backend));
      runtime::Runtime rt;
      rt.start({pred_pool.workers});
      gp::Context ctx{rt, *backend};
      gp::Options opts;
      opts.tiles_per_dim = pred_pool.tiles;
      gp::PredictionResult res;
      if (pred_mode == "none")
        res = gp::predict(ctx, train, test, pred_theta.get(), opts);
      else if (pred_mode == "diag")
        res = gp::predict_with_uncertainty(ctx, train, test, pred_theta.get(), opts);
      else
        res = gp::predict_full_cov(ctx, train, test, pred_theta.get(), opts);
      rt.shutdown();

      std::ofstream file;
      if (!pred_out.empty()) {
        file.open(pred_out);
        if (!file) throw IoError("cannot write '" + pred_out + "'");
      }
      std::ostream& dst = pred_out.empty() ? out : file;
      dst << std::setprecision(17);
      dst << (res.variance ? "index,target,mean,variance\n" : "index,target,mean\n");
      for (std::size_t i = 0; i < res.mean.size(); ++i) {
        dst << i << ',' << test.targets[i] << ',' << res.mean[i];
        if (res.variance) dst << ',' << (*res.variance)[i];
        dst << '\n';
      }
      if (!dst) throw IoError("write failed");
    } else if (optim->parsed()) {
      const Dataset train = sim::load_dataset(opt_train);
      const auto backend = blas::make_backend(blas::parse_backend(opt_pool.backend));
      runtime::Runtime rt;
      rt.start({opt_pool.workers});
      gp::Context ctx{rt, *backend};
      gp::Options opts;
      opts.tiles_per_dim = opt_pool.tiles;
      const auto res = gp::optimize(ctx, train, opt_theta.get(), opt_iters, rates, opts);
      rt.shutdown();
      out << std::setprecision(10);
      for (std::size_t i = 0; i < res.loss_trace.size(); ++i)
        out << "iter " << i << " loss " << res.loss_trace[i] << '\n';
      out << "length_scale " << res.theta.length_scale() << '\n'
          << "signal_variance " << res.theta.signal_variance() << '\n'
          << "noise_variance " << res.theta.noise_variance() << '\n';
    }
  } catch (const std::exception& e) {
    return classify(e, err);
  }
  return ok;
}

}  // namespace gprs::cli
