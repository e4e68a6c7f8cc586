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

#include "lqgmfg/ode.h"

#include <algorithm>
#include <cmath>

#include "lqgmfg/errors.h"

namespace lqgmfg {
namespace {

bool Bad(std::span<const double> v, double cap) {
  return std::any_of(v.begin(), v.end(), [cap](double x) {
    return !std::isfinite(x) || std::abs(x) > cap;
  });
}

}  // namespace

std::vector<double> Trajectory::Component(int c) const {
  std::vector<double> out(grid_.size());
  for (int j = 0; j < grid_.size(); ++j) out[j] = At(j)[c];
  return out;
}

Trajectory IntegrateBackward(const VectorField& field,
                             std::span<const double> terminal,
                             const TimeGrid& grid,
                             const BackwardOptions& options) {
  const int dim = static_cast<int>(terminal.size());
  Trajectory out(grid, dim);
  const int n = grid.steps();
  std::copy(terminal.begin(), terminal.end(), out.At(n).begin());
  if (Bad(out.At(n), options.magnitude_cap)) {
    throw DivergenceError(n, "terminal value not finite");
  }

  const double h = -grid.dt();
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  for (int j = n; j > 0; --j) {
    const double t = grid.t(j);
    std::span<const double> v = out.At(j);
    field(t, v, k1);
    for (int c = 0; c < dim; ++c) tmp[c] = v[c] + 0.5 * h * k1[c];
    field(t + 0.5 * h, tmp, k2);
    for (int c = 0; c < dim; ++c) tmp[c] = v[c] + 0.5 * h * k2[c];
    field(t + 0.5 * h, tmp, k3);
    for (int c = 0; c < dim; ++c) tmp[c] = v[c] + h * k3[c];
    field(grid.t(j - 1), tmp, k4);

    std::span<double> next = out.At(j - 1);
    for (int c = 0; c < dim; ++c) {
      next[c] = v[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    if (options.project) options.project(next);
    if (Bad(next, options.magnitude_cap)) {
      throw DivergenceError(j - 1, "backward integration diverged");
    }
  }
  return out;
}

std::vector<double> IntegrateBackwardScalar(
    const std::function<double(double, double)>& rhs, double terminal,
    const TimeGrid& grid) {
  const double init[1] = {terminal};
  Trajectory traj = IntegrateBackward(
      [&rhs](double t, std::span<const double> v, std::span<double> dv) {
        dv[0] = rhs(t, v[0]);
      },
      init, grid);
  return traj.Component(0);
}

std::vector<double> TailIntegral(std::span<const double> f, double h) {
  const int n = static_cast<int>(f.size()) - 1;
  if (n < 1) throw DomainError("quadrature needs at least two nodes");
  std::vector<double> tail(n + 1, 0.0);
  if (n == 1) {
    tail[0] = 0.5 * h * (f[0] + f[1]);
    return tail;
  }
  // Even panel counts: Simpson pairs accumulated from T.
  for (int j = n - 2; j >= 0; j -= 2) {
    tail[j] = tail[j + 2] + h / 3.0 * (f[j] + 4.0 * f[j + 1] + f[j + 2]);
  }
  // Odd panel counts: 3/8 rule on [t_j, t_{j+3}] plus an even tail.
  for (int j = n - 3; j >= 0; j -= 2) {
    tail[j] = tail[j + 3] +
              3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
  }
  // Single last panel: cubic through the four trailing nodes.
  if (n >= 3) {
    tail[n - 1] = h / 24.0 *
                  (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n]);
  } else {
    tail[n - 1] = h / 12.0 * (-f[n - 2] + 8.0 * f[n - 1] + 5.0 * f[n]);
  }
  return tail;
}

std::vector<double> HeadIntegral(std::span<const double> f, double h) {
  std::vector<double> reversed(f.rbegin(), f.rend());
  std::vector<double> tail = TailIntegral(reversed, h);
  std::reverse(tail.begin(), tail.end());
  return tail;
}

}  // namespace lqgmfg
