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

#include <cmath>
#include <limits>

#include "gprs/error.hpp"
#include "gprs/gp.hpp"

namespace gprs::gp {

AdamUpdate adam_step(const AdamState& state, const std::array<double, 3>& grad,
                     const std::array<double, 3>& params) {
  const AdamRates& r = state.rates;
  AdamUpdate out{state, params};
  out.state.step = state.step + 1;
  const double t = static_cast<double>(out.state.step);
  const double bias1 = 1.0 - std::pow(r.beta1, t);
  const double bias2 = 1.0 - std::pow(r.beta2, t);
  for (std::size_t p = 0; p < 3; ++p) {
    out.state.m[p] = r.beta1 * state.m[p] + (1.0 - r.beta1) * grad[p];
    out.state.v[p] = r.beta2 * state.v[p] + (1.0 - r.beta2) * grad[p] * grad[p];
    const double m_hat = out.state.m[p] / bias1;
    const double v_hat = out.state.v[p] / bias2;
    out.params[p] = params[p] - r.learning_rate * m_hat / (std::sqrt(v_hat) + r.epsilon);
  }
  return out;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw ConfigError("softplus_inverse: argument must be positive");
  // log(e^y - 1) = y + log(1 - e^-y)
  return y + std::log(-std::expm1(-y));
}

std::array<double, 3> to_unconstrained(const Hyperparameters& theta) {
  const double noise = std::max(theta.noise_variance(), std::numeric_limits<double>::min());
  return {softplus_inverse(theta.length_scale()), softplus_inverse(theta.signal_variance()),
          softplus_inverse(noise)};
}

Hyperparameters from_unconstrained(const std::array<double, 3>& raw) {
  return Hyperparameters(softplus(raw[0]), softplus(raw[1]), softplus(raw[2]));
}

}  // namespace gprs::gp
