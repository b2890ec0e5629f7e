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
#include <vector>

#include "gprs/kernels.hpp"

/// Nonlinear mass-spring-damper data source:
///   m x'' + c x' + k x + k3 x^3 = u(t)
/// driven by a piecewise-constant random force.
namespace gprs::sim {

struct MsdConfig {
  double mass = 1.0;
  double damping = 0.5;
  double stiffness = 2.0;
  double cubic_stiffness = 1.0;
  double dt = 0.01;
  std::size_t n_steps = 10000;
  /// Force levels are drawn uniformly from [-amplitude, amplitude] ...
  double amplitude = 1.0;
  /// ... and held for this many steps.
  std::size_t hold_steps = 50;
  std::uint64_t seed = 42;
  /// Initial displacement and velocity.
  double x0 = 0.0;
  double v0 = 0.0;
};

/// Throws ConfigError for non-positive mass/stiffness/dt/n_steps/hold_steps,
/// negative damping or amplitude, or dt * sqrt(k / m) >= 0.5.
void validate(const MsdConfig& cfg);

struct TimeSeries {
  std::vector<double> force;         ///< u_t, held over [t dt, (t+1) dt)
  std::vector<double> displacement;  ///< x_t = x(t dt), x_0 = cfg.x0
  std::vector<double> velocity;
};

/// Classical RK4. Throws InstabilityError if |x| exceeds 1e6.
TimeSeries simulate(const MsdConfig& cfg);

/// Per-column affine standardization x -> (x - mean) / scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  double forward(double x, std::size_t col = 0) const { return (x - mean[col]) / scale[col]; }
  double inverse(double z, std::size_t col = 0) const { return z * scale[col] + mean[col]; }
};

struct GeneratedData {
  Dataset dataset;
  Standardizer features;
  Standardizer targets;
};

/// Sliding windows: z_i = (u_{t-D+1}, ..., u_t), y_i = x_{t+1}, for
/// t = D-1, D-1+stride, ... <= n_steps-2. Features and targets are then
/// standardized to zero mean and unit variance.
GeneratedData make_dataset(const TimeSeries& series, std::size_t window, std::size_t stride);

/// Number of steps needed for `samples` windows.
std::size_t steps_for_samples(std::size_t samples, std::size_t window, std::size_t stride);

/// Text format: header `# gprs-dataset v1 N=<n> D=<d>`, then one row per
/// sample with D features and the observation, space separated, written as
/// hexadecimal floats. The reader also accepts decimal numbers.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Split into the first `n_train` rows and the remainder.
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train);

}  // namespace gprs::sim
