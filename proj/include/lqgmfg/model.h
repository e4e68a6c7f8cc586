// Copyright 2026 The lqgmfg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Game constants, initial-state laws and the uniform time grid shared by all
// modules.

#ifndef LQGMFG_MODEL_H_
#define LQGMFG_MODEL_H_

#include <optional>
#include <string>
#include <variant>

#include "lqgmfg/rng.h"

namespace lqgmfg {

// Uniform grid t_j = j * T / steps, j = 0..steps.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  int size() const { return steps_ + 1; }
  double dt() const { return horizon_ / steps_; }
  // Exact endpoints: t(0) == 0 and t(steps) == T.
  double t(int j) const;

  // Index of the node closest to `time`; throws unless it lies on the grid
  // to within 1e-9 * T.
  int IndexOf(double time) const;

 private:
  double horizon_;
  int steps_;
};

struct GaussianLaw {
  double mean = 0.0;
  double var = 1.0;
};

struct TwoPointLaw {
  double x_lo = -1.0;
  double x_hi = 1.0;
  double prob_hi = 0.5;
};

struct ShiftedExponentialLaw {
  double rate = 1.0;
  double shift = 0.0;
};

// Law of X_0. All variants have moments of every order.
class InitialLaw {
 public:
  using Variant = std::variant<GaussianLaw, TwoPointLaw, ShiftedExponentialLaw>;

  InitialLaw() : law_(GaussianLaw{}) {}
  explicit InitialLaw(Variant law);

  const Variant& variant() const { return law_; }
  bool is_gaussian() const {
    return std::holds_alternative<GaussianLaw>(law_);
  }
  std::string Name() const;

  double Mean() const;
  double Variance() const;
  double Quantile(double u) const;
  double Sample(RandomStream& rng) const;

 private:
  Variant law_;
};

struct ModelParams {
  double k = 1.0;  // weight of the quadratic interaction cost
  double T = 1.0;  // horizon
  std::optional<int> N;  // player count; absent for mean-field-only use
  double p = 1.0;  // Wasserstein order
  InitialLaw initial_law;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  int RequireN() const;
};

}  // namespace lqgmfg

#endif  // LQGMFG_MODEL_H_
