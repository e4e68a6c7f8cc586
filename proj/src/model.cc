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

#include "lqgmfg/model.h"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "lqgmfg/errors.h"

namespace lqgmfg {

TimeGrid::TimeGrid(double horizon, int steps)
    : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("T", "T>0 required");
  }
  if (steps < 1) throw ConfigError("steps", "steps>=1 required");
}

double TimeGrid::t(int j) const {
  if (j == steps_) return horizon_;
  return horizon_ * static_cast<double>(j) / steps_;
}

int TimeGrid::IndexOf(double time) const {
  const double x = time / horizon_ * steps_;
  const long j = std::lround(x);
  if (j < 0 || j > steps_ || std::abs(t(static_cast<int>(j)) - time) >
                                 1e-9 * horizon_) {
    throw ConfigError("t", "time " + std::to_string(time) +
                               " is not a node of the time grid");
  }
  return static_cast<int>(j);
}

InitialLaw::InitialLaw(Variant law) : law_(law) {
  if (const auto* g = std::get_if<GaussianLaw>(&law_)) {
    if (!(g->var >= 0.0) || !std::isfinite(g->mean)) {
      throw ConfigError("initial_law.var", "var>=0 required");
    }
  } else if (const auto* tp = std::get_if<TwoPointLaw>(&law_)) {
    if (!(tp->prob_hi > 0.0 && tp->prob_hi < 1.0)) {
      throw ConfigError("initial_law.prob_hi", "0<prob_hi<1 required");
    }
    if (!std::isfinite(tp->x_lo) || !std::isfinite(tp->x_hi)) {
      throw ConfigError("initial_law.x_lo", "finite support points required");
    }
  } else {
    const auto& e = std::get<ShiftedExponentialLaw>(law_);
    if (!(e.rate > 0.0)) {
      throw ConfigError("initial_law.rate", "rate>0 required");
    }
  }
}

std::string InitialLaw::Name() const {
  switch (law_.index()) {
    case 0: return "gaussian";
    case 1: return "two_point";
    default: return "shifted_exponential";
  }
}

double InitialLaw::Mean() const {
  if (const auto* g = std::get_if<GaussianLaw>(&law_)) return g->mean;
  if (const auto* tp = std::get_if<TwoPointLaw>(&law_)) {
    return tp->x_lo + tp->prob_hi * (tp->x_hi - tp->x_lo);
  }
  const auto& e = std::get<ShiftedExponentialLaw>(law_);
  return e.shift + 1.0 / e.rate;
}

double InitialLaw::Variance() const {
  if (const auto* g = std::get_if<GaussianLaw>(&law_)) return g->var;
  if (const auto* tp = std::get_if<TwoPointLaw>(&law_)) {
    const double gap = tp->x_hi - tp->x_lo;
    return tp->prob_hi * (1.0 - tp->prob_hi) * gap * gap;
  }
  const auto& e = std::get<ShiftedExponentialLaw>(law_);
  return 1.0 / (e.rate * e.rate);
}

double InitialLaw::Quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile level outside (0,1)");
  if (const auto* g = std::get_if<GaussianLaw>(&law_)) {
    if (g->var == 0.0) return g->mean;
    return boost::math::quantile(
        boost::math::normal_distribution<double>(g->mean, std::sqrt(g->var)),
        u);
  }
  if (const auto* tp = std::get_if<TwoPointLaw>(&law_)) {
    return u <= 1.0 - tp->prob_hi ? tp->x_lo : tp->x_hi;
  }
  const auto& e = std::get<ShiftedExponentialLaw>(law_);
  return e.shift - std::log1p(-u) / e.rate;
}

double InitialLaw::Sample(RandomStream& rng) const {
  if (const auto* g = std::get_if<GaussianLaw>(&law_)) {
    return g->mean + std::sqrt(g->var) * rng.Normal();
  }
  if (const auto* tp = std::get_if<TwoPointLaw>(&law_)) {
    return rng.Uniform() < tp->prob_hi ? tp->x_hi : tp->x_lo;
  }
  const auto& e = std::get<ShiftedExponentialLaw>(law_);
  return e.shift - std::log(rng.Uniform()) / e.rate;
}

void ModelParams::Validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("k", "k>0 required");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T", "T>0 required");
  if (N && *N < 2) throw ConfigError("N", "N>=2 required");
  if (!(p >= 1.0 && p <= 2.0)) throw ConfigError("p", "1<=p<=2 required");
}

int ModelParams::RequireN() const {
  if (!N) throw ConfigError("N", "player count N is required here");
  if (*N < 2) throw ConfigError("N", "N>=2 required");
  return *N;
}

}  // namespace lqgmfg
