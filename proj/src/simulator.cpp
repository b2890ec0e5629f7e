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

#include "gprs/simulator.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gprs/error.hpp"

namespace gprs::sim {

void validate(const MsdConfig& cfg) {
  if (!(cfg.mass > 0.0)) throw ConfigError("msd: mass must be positive");
  if (!(cfg.stiffness > 0.0)) throw ConfigError("msd: stiffness must be positive");
  if (!(cfg.damping >= 0.0)) throw ConfigError("msd: damping must be non-negative");
  if (!std::isfinite(cfg.cubic_stiffness)) throw ConfigError("msd: cubic stiffness must be finite");
  if (!(cfg.dt > 0.0)) throw ConfigError("msd: dt must be positive");
  if (cfg.n_steps == 0) throw ConfigError("msd: n_steps must be positive");
  if (cfg.hold_steps == 0) throw ConfigError("msd: hold_steps must be positive");
  if (!(cfg.amplitude >= 0.0)) throw ConfigError("msd: amplitude must be non-negative");
  if (!(cfg.dt * std::sqrt(cfg.stiffness / cfg.mass) < 0.5))
    throw ConfigError("msd: dt * sqrt(k / m) must stay below 0.5 for a stable integration");
}

TimeSeries simulate(const MsdConfig& cfg) {
  validate(cfg);
  TimeSeries ts;
  ts.force.resize(cfg.n_steps);
  ts.displacement.resize(cfg.n_steps);
  ts.velocity.resize(cfg.n_steps);

  std::mt19937_64 rng(cfg.seed);
  // Inverse-CDF by hand: std::uniform_real_distribution is not bit-identical
  // across standard library implementations.
  auto draw = [&] {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return cfg.amplitude * (2.0 * unit - 1.0);
  };

  const double m = cfg.mass;
  auto accel = [&](double x, double v, double u) {
    return (u - cfg.damping * v - cfg.stiffness * x - cfg.cubic_stiffness * x * x * x) / m;
  };

  double x = cfg.x0;
  double v = cfg.v0;
  double u = 0.0;
  const double h = cfg.dt;
  for (std::size_t t = 0; t < cfg.n_steps; ++t) {
    if (t % cfg.hold_steps == 0) u = draw();
    ts.force[t] = u;
    ts.displacement[t] = x;
    ts.velocity[t] = v;

    const double k1x = v;
    const double k1v = accel(x, v, u);
    const double k2x = v + 0.5 * h * k1v;
    const double k2v = accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v, u);
    const double k3x = v + 0.5 * h * k2v;
    const double k3v = accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v, u);
    const double k4x = v + h * k3v;
    const double k4v = accel(x + h * k3x, v + h * k3v, u);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!(std::abs(x) <= 1e6)) throw InstabilityError(t + 1);
  }
  return ts;
}

std::size_t steps_for_samples(std::size_t samples, std::size_t window, std::size_t stride) {
  if (samples == 0) return 0;
  return (samples - 1) * stride + window + 1;
}

namespace {

Standardizer fit_columns(const Matrix& m) {
  Standardizer s;
  const auto n = static_cast<double>(m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
    var /= n;
    const double sd = std::sqrt(var);
    s.mean.push_back(mean);
    // Constant columns are centred but not scaled.
    s.scale.push_back(sd > 0.0 ? sd : 1.0);
  }
  return s;
}

}  // namespace

GeneratedData make_dataset(const TimeSeries& series, std::size_t window, std::size_t stride) {
  if (window == 0) throw ConfigError("make_dataset: window must be positive");
  if (stride == 0) throw ConfigError("make_dataset: stride must be positive");
  const std::size_t len = series.force.size();
  if (series.displacement.size() != len)
    throw DimensionError("make_dataset: force and displacement lengths differ");
  if (len <= window)
    throw ConfigError("make_dataset: series of length " + std::to_string(len) +
                      " is too short for window " + std::to_string(window));

  const std::size_t count = (len - 1 - window) / stride + 1;
  Matrix z(count, window);
  Matrix y(count, 1);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t t = window - 1 + i * stride;
    for (std::size_t d = 0; d < window; ++d) z(i, d) = series.force[t + 1 - window + d];
    y(i, 0) = series.displacement[t + 1];
  }

  GeneratedData out;
  out.features = fit_columns(z);
  out.targets = fit_columns(y);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t d = 0; d < window; ++d) z(i, d) = out.features.forward(z(i, d), d);
  std::vector<double> targets(count);
  for (std::size_t i = 0; i < count; ++i) targets[i] = out.targets.forward(y(i, 0));
  out.dataset = Dataset(std::move(z), std::move(targets));
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "# gprs-dataset v1 N=" << ds.n() << " D=" << ds.d() << '\n';
  std::array<char, 64> buf{};
  auto put = [&](double v) {
    std::snprintf(buf.data(), buf.size(), "%a", v);
    out << buf.data();
  };
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t d = 0; d < ds.d(); ++d) {
      put(ds.features(i, d));
      out << ' ';
    }
    put(ds.targets[i]);
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

namespace {

std::size_t parse_header_field(const std::string& token, const char* key, std::size_t line) {
  const std::string prefix = std::string(key) + "=";
  if (token.rfind(prefix, 0) != 0) throw ParseError(line, "malformed header: expected " + prefix);
  std::size_t value = 0;
  const char* first = token.data() + prefix.size();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last)
    throw ParseError(line, "malformed header: bad value in '" + token + "'");
  return value;
}

double parse_number(const std::string& token, std::size_t line) {
  // strtod understands both hexadecimal and decimal floating point.
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size())
    throw ParseError(line, "non-numeric field '" + token + "'");
  return v;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "malformed header: file is empty");
  std::istringstream header(line);
  std::string hash, magic, version, n_tok, d_tok, extra;
  header >> hash >> magic >> version >> n_tok >> d_tok;
  if (hash != "#" || magic != "gprs-dataset" || version != "v1" || (header >> extra))
    throw ParseError(1, "malformed header: expected '# gprs-dataset v1 N=<n> D=<d>'");
  const std::size_t n = parse_header_field(n_tok, "N", 1);
  const std::size_t d = parse_header_field(d_tok, "D", 1);
  if (d == 0) throw ParseError(1, "malformed header: D must be positive");

  Matrix features(n, d);
  std::vector<double> targets(n);
  std::size_t row = 0;
  std::size_t line_no = 1;
  std::string token;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (row == n) throw ParseError(line_no, "row-count mismatch: more than N=" + std::to_string(n) + " rows");
    std::istringstream fields(line);
    std::size_t col = 0;
    while (fields >> token) {
      if (col > d)
        throw ParseError(line_no, "row has more than " + std::to_string(d + 1) + " fields");
      const double v = parse_number(token, line_no);
      if (col < d)
        features(row, col) = v;
      else
        targets[row] = v;
      ++col;
    }
    if (col != d + 1)
      throw ParseError(line_no, "row has " + std::to_string(col) + " fields, expected " +
                                    std::to_string(d + 1));
    ++row;
  }
  if (row != n)
    throw ParseError(line_no + 1, "row-count mismatch: header declares N=" + std::to_string(n) +
                                      " but file has " + std::to_string(row) + " rows");
  return Dataset(std::move(features), std::move(targets));
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train) {
  if (n_train == 0 || n_train >= ds.n())
    throw ConfigError("split: n_train must be in [1, N)");
  auto take = [&](std::size_t begin, std::size_t end) {
    Matrix f(end - begin, ds.d());
    std::vector<double> y(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t d = 0; d < ds.d(); ++d) f(i - begin, d) = ds.features(i, d);
      y[i - begin] = ds.targets[i];
    }
    return Dataset(std::move(f), std::move(y));
  };
  return {take(0, n_train), take(n_train, ds.n())};
}

}  // namespace gprs::sim
