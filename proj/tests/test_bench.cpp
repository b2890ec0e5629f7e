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


#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gprs/bench.hpp"
#include "gprs/error.hpp"

namespace gprs::bench {
namespace {

namespace fs = std::filesystem;

BenchRecord rec(std::size_t workers, std::size_t rep, double secs, std::size_t n = 64) {
  BenchRecord r;
  r.experiment = Experiment::pred_full;
  r.n_train = n;
  r.n_test = n;
  r.tiles = 4;
  r.workers = workers;
  r.rep = rep;
  r.wall_seconds = secs;
  r.tasks = 100;
  return r;
}

TEST(Csv, HeaderIsStable) {
  EXPECT_EQ(csv_header(), "experiment,n_train,n_test,tiles,workers,backend,rep,wall_seconds,tasks");
}

TEST(Csv, RoundTrip) {
  std::mt19937_64 rng(1);
  std::vector<BenchRecord> rs;
  for (int i = 0; i < 50; ++i) {
    BenchRecord r = rec(1 + rng() % 8, 1 + rng() % 10,
                        std::uniform_real_distribution<double>(1e-6, 100.0)(rng));
    r.experiment = i % 2 ? Experiment::opt : Experiment::pred_full;
    r.backend = i % 3 ? blas::BackendId::reference : blas::BackendId::system;
    r.tasks = rng() % 100000;
    rs.push_back(r);
  }
  std::stringstream ss;
  write_csv(ss, rs);
  EXPECT_EQ(read_csv(ss), rs);
}

TEST(Csv, MalformedRows) {
  EXPECT_THROW(parse_csv_row("pred_full,1,2,3", 7), ParseError);
  EXPECT_THROW(parse_csv_row("foo,1,1,1,1,reference,1,0.5,3", 2), ParseError);
  EXPECT_THROW(parse_csv_row("opt,1,1,1,1,reference,1,abc,3", 2), ParseError);
  try {
    parse_csv_row("opt,x,1,1,1,reference,1,0.5,3", 9);
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 9u);
  }
  std::stringstream bad("wrong,header\n");
  EXPECT_THROW(read_csv(bad), ParseError);
}

TEST(Stats, StudentQuantile) {
  EXPECT_NEAR(student_t_975(9), 2.2622, 1e-4);
  EXPECT_NEAR(student_t_975(1), 12.7062, 1e-4);
  EXPECT_THROW(student_t_975(0), ConfigError);
}

TEST(Summarize, ConstantSamples) {
  const std::vector<BenchRecord> rs{rec(1, 1, 2.0), rec(1, 2, 2.0), rec(1, 3, 2.0)};
  const auto s = summarize(rs);
  ASSERT_EQ(s.rows.size(), 1u);
  EXPECT_EQ(s.rows[0].mean, 2.0);
  ASSERT_TRUE(s.rows[0].ci95);
  EXPECT_EQ(*s.rows[0].ci95, 0.0);
  EXPECT_EQ(*s.rows[0].speedup, 1.0);
  EXPECT_EQ(*s.rows[0].efficiency, 1.0);
}

TEST(Summarize, TenIdenticalTimings) {
  std::vector<BenchRecord> rs;
  for (std::size_t i = 1; i <= 10; ++i) rs.push_back(rec(1, i, 0.125));
  EXPECT_EQ(*summarize(rs).rows[0].ci95, 0.0);
}

TEST(Summarize, HandCheckedInterval) {
  std::vector<BenchRecord> rs;
  for (std::size_t i = 1; i <= 10; ++i) rs.push_back(rec(1, i, static_cast<double>(i)));
  const auto s = summarize(rs);
  EXPECT_DOUBLE_EQ(s.rows[0].mean, 5.5);
  EXPECT_NEAR(*s.rows[0].ci95, 2.2622 * 3.0277 / std::sqrt(10.0), 1e-3);
  EXPECT_NEAR(*s.rows[0].ci95, 2.166, 1e-3);
}

TEST(Summarize, SingleSampleHasNoInterval) {
  const auto s = summarize(std::vector<BenchRecord>{rec(1, 1, 3.0)});
  EXPECT_FALSE(s.rows[0].ci95);
  EXPECT_EQ(*s.rows[0].efficiency, 1.0);
}

TEST(Summarize, SpeedupAndEfficiency) {
  const std::vector<BenchRecord> rs{rec(1, 1, 8.0), rec(2, 1, 5.0), rec(4, 1, 2.0),
                                    rec(2, 1, 1.0, 128)};
  const auto s = summarize(rs);
  ASSERT_EQ(s.rows.size(), 4u);
  EXPECT_EQ(s.rows[0].workers, 1u);
  EXPECT_EQ(*s.rows[1].speedup, 1.6);
  EXPECT_EQ(*s.rows[1].efficiency, 0.8);
  EXPECT_EQ(*s.rows[2].speedup, 4.0);
  EXPECT_EQ(*s.rows[2].efficiency, 1.0);
  // No 1-worker group for n=128.
  EXPECT_EQ(s.rows[3].n_train, 128u);
  EXPECT_FALSE(s.rows[3].speedup);
  EXPECT_THROW(summarize(std::vector<BenchRecord>{}), ConfigError);
}

TEST(Summarize, PermutationInvariantProperty) {
  std::mt19937_64 rng(2);
  std::vector<BenchRecord> rs;
  for (std::size_t w : {1u, 2u, 4u})
    for (std::size_t i = 1; i <= 10; ++i)
      rs.push_back(rec(w, i, std::uniform_real_distribution<double>(0.1, 1.0)(rng)));
  const auto base = summarize(rs);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(rs.begin(), rs.end(), rng);
    const auto s = summarize(rs);
    ASSERT_EQ(s.rows.size(), base.rows.size());
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      ASSERT_EQ(s.rows[i].mean, base.rows[i].mean);
      ASSERT_EQ(s.rows[i].ci95, base.rows[i].ci95);
      ASSERT_EQ(s.rows[i].speedup, base.rows[i].speedup);
    }
  }
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "gprs_test_bench" / name;
  fs::remove_all(d);
  return d;
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

TEST(PlotData, StrongScalingColumns) {
  const auto dir = fresh_dir("strong");
  const std::vector<BenchRecord> one{rec(1, 1, 2.0)};
  const auto files = emit_plotdata(summarize(one), dir, PlotKind::strong_scaling);
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(files[0].filename().string().rfind("strong_", 0), 0u);
  const auto lines = data_lines(files[0]);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0], "1 2 NA 1 1");
  std::ifstream in(files[0]);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "# workers mean ci95 speedup efficiency");
  EXPECT_TRUE(fs::exists(fs::path(files[0]).replace_extension(".gp")));
}

TEST(PlotData, SizeScalingSortedLogLog) {
  const auto dir = fresh_dir("size");
  const std::vector<BenchRecord> rs{rec(2, 1, 4.0, 512), rec(2, 1, 1.0, 8), rec(2, 1, 2.0, 64)};
  const auto files = emit_plotdata(summarize(rs), dir, PlotKind::size_scaling);
  ASSERT_EQ(files.size(), 1u);
  const auto lines = data_lines(files[0]);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].substr(0, 2), "8 ");
  EXPECT_EQ(lines[1].substr(0, 3), "64 ");
  EXPECT_EQ(lines[2].substr(0, 4), "512 ");
  std::ifstream gp(fs::path(files[0]).replace_extension(".gp"));
  std::stringstream ss;
  ss << gp.rdbuf();
  EXPECT_NE(ss.str().find("set logscale xy"), std::string::npos);
}

TEST(Schedule, DefaultsAndParse) {
  const TilesSchedule s;
  EXPECT_EQ(s.tiles_for(8), 1u);
  EXPECT_EQ(s.tiles_for(256), 1u);
  EXPECT_EQ(s.tiles_for(512), 4u);
  EXPECT_EQ(s.tiles_for(2048), 4u);
  EXPECT_EQ(s.tiles_for(4096), 16u);
  const TilesSchedule p = TilesSchedule::parse("16:1,64:2,8");
  EXPECT_EQ(p.tiles_for(16), 1u);
  EXPECT_EQ(p.tiles_for(32), 2u);
  EXPECT_EQ(p.tiles_for(1024), 8u);
  EXPECT_EQ(TilesSchedule::parse("4").tiles_for(100), 4u);
  EXPECT_THROW(TilesSchedule::parse("16:1"), ConfigError);
  EXPECT_THROW(TilesSchedule::parse("64:1,16:2,4"), ConfigError);
  EXPECT_THROW(TilesSchedule::parse("a:b,4"), ConfigError);
  EXPECT_THROW(TilesSchedule::parse("4,8"), ConfigError);
}

TEST(Runners, StrongScalingSingleWorker) {
  const auto [train, test] = generate_train_test(64, 32, 42);
  RunConfig cfg;
  cfg.tiles = 4;
  cfg.reps = 1;
  const std::vector<std::size_t> workers{1};
  const auto rs = run_strong_scaling(train, test, workers, cfg);
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_GT(rs[0].wall_seconds, 0.0);
  EXPECT_EQ(rs[0].rep, 1u);
  const auto s = summarize(rs);
  EXPECT_EQ(*s.rows[0].efficiency, 1.0);
}

TEST(Runners, TaskCountsStableAcrossReps) {
  const auto [train, test] = generate_train_test(48, 16, 7);
  for (Experiment e : {Experiment::pred_full, Experiment::opt}) {
    RunConfig cfg;
    cfg.experiment = e;
    cfg.tiles = 3;
    cfg.reps = 4;
    const std::vector<std::size_t> workers{1, 2};
    const auto rs = run_strong_scaling(train, test, workers, cfg);
    ASSERT_EQ(rs.size(), 8u);
    for (const auto& r : rs) {
      EXPECT_EQ(r.tasks, rs[0].tasks);
      EXPECT_GT(r.tasks, 0u);
      EXPECT_GE(r.rep, 1u);
      EXPECT_LE(r.rep, 4u);
    }
  }
}

TEST(Runners, SizeScaling) {
  RunConfig cfg;
  cfg.reps = 2;
  const std::vector<std::size_t> sizes{8, 16, 32};
  TilesSchedule sched;
  sched.steps = {{8, 1}};
  sched.tiles_above = 2;
  const auto rs = run_size_scaling(sizes, sched, 1, cfg, 42);
  ASSERT_EQ(rs.size(), 6u);
  EXPECT_EQ(rs[0].tiles, 1u);
  EXPECT_EQ(rs[2].tiles, 2u);
  EXPECT_EQ(rs[5].n_train, 32u);
  const std::vector<std::size_t> bad{8, 12};
  EXPECT_THROW(run_size_scaling(bad, sched, 1, cfg, 42), ConfigError);
  const std::vector<std::size_t> desc{16, 8};
  EXPECT_THROW(run_size_scaling(desc, sched, 1, cfg, 42), ConfigError);
}

TEST(Runners, TraceFile) {
  const auto dir = fresh_dir("trace");
  fs::create_directories(dir);
  const auto [train, test] = generate_train_test(16, 8, 1);
  RunConfig cfg;
  cfg.tiles = 2;
  cfg.reps = 1;
  cfg.warmup = false;
  cfg.trace_path = dir / "trace.txt";
  const std::vector<std::size_t> workers{1};
  const auto rs = run_strong_scaling(train, test, workers, cfg);
  const auto lines = data_lines(*cfg.trace_path);
  EXPECT_EQ(lines.size(), rs[0].tasks);
  EXPECT_NE(lines[0].find(','), std::string::npos);
}

}  // namespace
}  // namespace gprs::bench
