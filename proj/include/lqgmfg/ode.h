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

// Backward RK4 for terminal-value problems and cumulative quadrature on a
// uniform grid.

#ifndef LQGMFG_ODE_H_
#define LQGMFG_ODE_H_

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "lqgmfg/model.h"

namespace lqgmfg {

// dv/dt = f(t, v), written into `dv`.
using VectorField = std::function<void(double t, std::span<const double> v,
                                       std::span<double> dv)>;

// Node-major samples of a vector-valued solution on a TimeGrid.
class Trajectory {
 public:
  Trajectory(TimeGrid grid, int dim)
      : grid_(grid), dim_(dim), data_(static_cast<size_t>(grid.size()) * dim) {}

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  std::span<double> At(int j) {
    return {data_.data() + static_cast<size_t>(j) * dim_,
            static_cast<size_t>(dim_)};
  }
  std::span<const double> At(int j) const {
    return {data_.data() + static_cast<size_t>(j) * dim_,
            static_cast<size_t>(dim_)};
  }
  std::vector<double> Component(int c) const;

 private:
  TimeGrid grid_;
  int dim_;
  std::vector<double> data_;
};

struct BackwardOptions {
  // Any |entry| above the cap counts as divergence.
  double magnitude_cap = std::numeric_limits<double>::infinity();
  // Applied to the state after every accepted step (e.g. symmetrization).
  std::function<void(std::span<double>)> project;
};

// Classical RK4 from t = T down to t = 0 starting at `terminal`.
// Throws DivergenceError at the first node with a non-finite or capped entry.
Trajectory IntegrateBackward(const VectorField& field,
                             std::span<const double> terminal,
                             const TimeGrid& grid,
                             const BackwardOptions& options = {});

std::vector<double> IntegrateBackwardScalar(
    const std::function<double(double t, double v)>& rhs, double terminal,
    const TimeGrid& grid);

// I_j = integral of f over [t_j, T], composite Simpson (3/8 rule on the
// leading panel when the panel count is odd). Requires f.size() >= 2.
std::vector<double> TailIntegral(std::span<const double> f, double h);

// I_j = integral of f over [0, t_j], same rules mirrored.
std::vector<double> HeadIntegral(std::span<const double> f, double h);

}  // namespace lqgmfg

#endif  // LQGMFG_ODE_H_
