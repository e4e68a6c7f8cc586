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


#include "lqgmfg/dynamics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "lqgmfg/errors.h"
#include "lqgmfg/ode.h"

namespace lqgmfg {
namespace {

void ExpKernel(std::span<const double> a, double h, std::vector<double>& e,
               std::vector<double>& s) {
  std::vector<double> two_a(a.size());
  for (size_t j = 0; j < a.size(); ++j) two_a[j] = 2.0 * a[j];
  const auto log_e = HeadIntegral(two_a, h);
  e.resize(a.size());
  std::vector<double> e_sq(a.size());
  for (size_t j = 0; j < a.size(); ++j) {
    e[j] = std::exp(log_e[j]);
    e_sq[j] = e[j] * e[j];
  }
  s = HeadIntegral(e_sq, h);
}

double Mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void RequireIntegrals(const NoiseBundle& noise) {
  if (!noise.has_integrals()) {
    throw ConfigError("method", "exact simulation needs Wiener integrals");
  }
}

}  // namespace

OuKernel BuildKernels(const RiccatiTable& table) {
  OuKernel k{table.grid, table.a, table.aHatN, {}, {}, {}, {}};
  const double h = table.grid.dt();
  ExpKernel(table.a, h, k.e2a, k.sigma2);
  if (table.has_nplayer()) ExpKernel(table.aHatN, h, k.e2a_hat, k.sigma2_hat);
  return k;
}

double ConditionalVariance(const OuKernel& kernels, int node, double var0) {
  const double e = kernels.e2a[node];
  return (var0 + kernels.sigma2[node]) / (e * e);
}

int GridStride(const TimeGrid& fine, const TimeGrid& coarse) {
  if (std::abs(fine.horizon() - coarse.horizon()) >
      1e-12 * fine.horizon()) {
    throw ConfigError("grid", "horizons differ");
  }
  if (fine.steps() % coarse.steps() != 0) {
    throw ConfigError("grid", "simulation steps must divide kernel steps");
  }
  return fine.steps() / coarse.steps();
}

ExactNoiseModel::ExactNoiseModel(const OuKernel& kernels,
                                 const TimeGrid& sim_grid)
    : grid_(sim_grid), distinct_hat_(kernels.has_nplayer()) {
  using Rule = boost::math::quadrature::gauss<double, 4>;
  const int stride = GridStride(kernels.grid, sim_grid);
  const double h = kernels.grid.dt();
  const auto& ea = kernels.e2a;
  const auto& eh = distinct_hat_ ? kernels.e2a_hat : kernels.e2a;
  const auto& ra = kernels.a;
  const auto& rh = distinct_hat_ ? kernels.a_hat : kernels.a;
  // Gauss nodes on [0, 1] with weights summing to 1.
  std::vector<double> x, w;
  for (size_t q = 0; q < Rule::abscissa().size(); ++q) {
    for (double sgn : {-1.0, 1.0}) {
      x.push_back(0.5 * (1.0 + sgn * Rule::abscissa()[q]));
      w.push_back(0.5 * Rule::weights()[q]);
    }
  }
  // log E on a kernel step: cubic Hermite from node values and slopes 2a.
  auto log_e = [h](double l0, double l1, double d0, double d1, double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * l0 + (s3 - 2 * s2 + s) * h * d0 +
           (-2 * s3 + 3 * s2) * l1 + (s3 - s2) * h * d1;
  };
  factors_.resize(sim_grid.steps());
  for (int m = 0; m < sim_grid.steps(); ++m) {
    double vw = 0, cwh = 0, cwa = 0, vh = 0, va = 0, cha = 0;
    for (int j = m * stride; j < (m + 1) * stride; ++j) {
      const double la0 = std::log(ea[j]), la1 = std::log(ea[j + 1]);
      const double lh0 = std::log(eh[j]), lh1 = std::log(eh[j + 1]);
      for (size_t q = 0; q < x.size(); ++q) {
        const double fa =
            std::exp(log_e(la0, la1, 2 * ra[j], 2 * ra[j + 1], x[q]));
        const double fh =
            std::exp(log_e(lh0, lh1, 2 * rh[j], 2 * rh[j + 1], x[q]));
        const double wq = w[q] * h;
        vw += wq;
        cwh += wq * fh;
        cwa += wq * fa;
        vh += wq * fh * fh;
        va += wq * fa * fa;
        cha += wq * fh * fa;
      }
    }
    std::array<double, 6>& l = factors_[m];
    l[0] = std::sqrt(vw);
    l[1] = cwh / l[0];
    l[2] = std::sqrt(std::max(vh - l[1] * l[1], 0.0));
    l[3] = cwa / l[0];
    l[4] = l[2] > 0 ? (cha - l[3] * l[1]) / l[2] : 0.0;
    l[5] = std::sqrt(std::max(va - l[3] * l[3] - l[4] * l[4], 0.0));
  }
}

NoiseBundle GenerateNoise(const TimeGrid& grid, const ExactNoiseModel* model,
                          const InitialLaw& law, int players,
                          const StreamId& id) {
  if (players < 1) throw ConfigError("N", "at least one player required");
  if (model && model->grid().steps() != grid.steps()) {
    throw ConfigError("grid", "noise model built for a different grid");
  }
  NoiseBundle nb{grid, players, {}, {}, {}, {}, {},
                 id.master_seed, std::string(id.tag), id.n, id.replication};
  RandomStream rng(id);
  const int steps = grid.steps();
  const size_t cells = static_cast<size_t>(steps) * players;
  nb.initials.resize(players);
  for (double& x : nb.initials) x = law.Sample(rng);
  nb.common.resize(steps);
  nb.idio.resize(cells);
  if (model) {
    nb.j_hat.resize(cells);
    nb.j_mfg.resize(cells);
  }
  const double sd = std::sqrt(grid.dt());
  for (int m = 0; m < steps; ++m) {
    nb.common[m] = sd * rng.Normal();
    for (int i = 0; i < players; ++i) {
      const size_t c = static_cast<size_t>(m) * players + i;
      if (!model) {
        nb.idio[c] = sd * rng.Normal();
        continue;
      }
      const auto& l = model->Factor(m);
      const double z0 = rng.Normal(), z1 = rng.Normal(), z2 = rng.Normal();
      nb.idio[c] = l[0] * z0;
      nb.j_mfg[c] = l[3] * z0 + l[4] * z1 + l[5] * z2;
      nb.j_hat[c] = model->distinct_hat() ? l[1] * z0 + l[2] * z1 : nb.j_mfg[c];
    }
  }
  return nb;
}

NoiseBundle Coarsen(const NoiseBundle& noise, int factor) {
  if (factor < 1 || noise.grid.steps() % factor != 0) {
    throw ConfigError("factor", "must divide the step count");
  }
  NoiseBundle out = noise;
  const int steps = noise.grid.steps() / factor, n = noise.players;
  out.grid = TimeGrid(noise.grid.horizon(), steps);
  out.common.assign(steps, 0.0);
  out.idio.assign(static_cast<size_t>(steps) * n, 0.0);
  if (noise.has_integrals()) {
    out.j_hat.assign(out.idio.size(), 0.0);
    out.j_mfg.assign(out.idio.size(), 0.0);
  }
  for (int m = 0; m < noise.grid.steps(); ++m) {
    const int M = m / factor;
    out.common[M] += noise.common[m];
    for (int i = 0; i < n; ++i) {
      const size_t src = static_cast<size_t>(m) * n + i;
      const size_t dst = static_cast<size_t>(M) * n + i;
      out.idio[dst] += noise.idio[src];
      if (noise.has_integrals()) {
        out.j_hat[dst] += noise.j_hat[src];
        out.j_mfg[dst] += noise.j_mfg[src];
      }
    }
  }
  return out;
}

MfgPath SimulateMfgEuler(const ModelParams& params, const RiccatiTable& table,
                         const TimeGrid& grid, double x0,
                         std::span<const double> common,
                         std::span<const double> idio) {
  if (grid.steps() < 2) throw ConfigError("steps", "steps>=2 required");
  const int steps = grid.steps();
  if (static_cast<int>(common.size()) != steps ||
      static_cast<int>(idio.size()) != steps) {
    throw ConfigError("noise", "increment count must equal grid steps");
  }
  const int stride = GridStride(table.grid, grid);
  const double dt = grid.dt();
  MfgPath path{grid, std::vector<double>(steps + 1),
               std::vector<double>(steps + 1), std::vector<double>(steps + 1)};
  path.x[0] = x0;
  path.mu[0] = params.initial_law.Mean();
  for (int j = 0; j <= steps; ++j) {
    path.controls[j] = -2.0 * table.a[j * stride] * (path.x[j] - path.mu[j]);
    if (j == steps) break;
    path.x[j + 1] = path.x[j] + path.controls[j] * dt + idio[j] + common[j];
    path.mu[j + 1] = path.mu[j] + common[j];
  }
  return path;
}

MfgPath SimulateMfgEuler(const ModelParams& params, const RiccatiTable& table,
                         const TimeGrid& grid, RandomStream& rng) {
  const double x0 = params.initial_law.Sample(rng);
  const double sd = std::sqrt(grid.dt());
  std::vector<double> common(grid.steps()), idio(grid.steps());
  for (int j = 0; j < grid.steps(); ++j) {
    common[j] = sd * rng.Normal();
    idio[j] = sd * rng.Normal();
  }
  return SimulateMfgEuler(params, table, grid, x0, common, idio);
}

MfgPath ExactMfgPath(const ModelParams& params, const OuKernel& kernels,
                     const NoiseBundle& noise, int i) {
  RequireIntegrals(noise);
  const int stride = GridStride(kernels.grid, noise.grid);
  const int steps = noise.grid.steps(), n = noise.players;
  const double m0 = params.initial_law.Mean();
  MfgPath path{noise.grid, std::vector<double>(steps + 1),
               std::vector<double>(steps + 1), std::vector<double>(steps + 1)};
  double y = noise.initials[i] - m0, w_common = 0.0;
  for (int j = 0; j <= steps; ++j) {
    const int f = j * stride;
    path.mu[j] = m0 + w_common;
    path.x[j] = y / kernels.e2a[f] + path.mu[j];
    path.controls[j] = -2.0 * kernels.a[f] * (path.x[j] - path.mu[j]);
    if (j == steps) break;
    y += noise.j_mfg[static_cast<size_t>(j) * n + i];
    w_common += noise.common[j];
  }
  return path;
}

std::vector<std::vector<double>> SimulateMfgEulerCrossSection(
    const ModelParams& params, const RiccatiTable& table, const TimeGrid& grid,
    std::span<const double> common, int copies, RandomStream& rng,
    std::span<const int> nodes) {
  if (static_cast<int>(common.size()) != grid.steps()) {
    throw ConfigError("noise", "increment count must equal grid steps");
  }
  if (!std::is_sorted(nodes.begin(), nodes.end())) {
    throw ConfigError("nodes", "checkpoints must be ascending");
  }
  const int stride = GridStride(table.grid, grid);
  const double dt = grid.dt(), sd = std::sqrt(dt);
  std::vector<double> x(copies);
  for (double& v : x) v = params.initial_law.Sample(rng);
  double mu = params.initial_law.Mean();
  std::vector<std::vector<double>> out;
  size_t next = 0;
  for (int j = 0; j <= grid.steps(); ++j) {
    while (next < nodes.size() && nodes[next] == j) {
      out.push_back(x);
      ++next;
    }
    if (j == grid.steps()) break;
    const double gain = 2.0 * table.a[j * stride] * dt;
    for (double& v : x) v += -gain * (v - mu) + sd * rng.Normal() + common[j];
    mu += common[j];
  }
  if (next != nodes.size()) throw ConfigError("nodes", "checkpoint off grid");
  return out;
}

EmpiricalMeasure1D ExactSampleMfg(const ModelParams& params,
                                  const OuKernel& kernels, int node,
                                  double common_shift, int count,
                                  RandomStream& rng) {
  if (node < 0 || node >= kernels.grid.size()) {
    throw ConfigError("t", "time not on the kernel grid");
  }
  const double m0 = params.initial_law.Mean();
  const double inv_e = 1.0 / kernels.e2a[node];
  const double sigma = std::sqrt(kernels.sigma2[node]);
  std::vector<double> x(count);
  for (double& v : x) {
    const double x0 = params.initial_law.Sample(rng) - m0;
    v = inv_e * (x0 + sigma * rng.Normal()) + m0 + common_shift;
  }
  return EmpiricalMeasure1D(std::move(x));
}

Law1D ConditionalLaw::ToLaw() const {
  if (!reference) return Law1D::Gaussian(mean, var);
  return Law1D::Shifted(Law1D::Empirical(*reference), shift);
}

ConditionalLaw ConditionalLawAt(const ModelParams& params,
                                const OuKernel& kernels, int node,
                                double common_shift, int reference_size,
                                RandomStream& rng) {
  ConditionalLaw law;
  law.shift = common_shift;
  law.mean = params.initial_law.Mean() + common_shift;
  law.var = ConditionalVariance(kernels, node, params.initial_law.Variance());
  if (!params.initial_law.is_gaussian()) {
    law.reference =
        ExactSampleMfg(params, kernels, node, 0.0, reference_size, rng);
  }
  return law;
}

std::string MethodName(Method m) {
  return m == Method::kEuler ? "euler" : "exact";
}

PathEnsemble SimulateNPlayer(const ModelParams& params,
                             const RiccatiTable& table,
                             const OuKernel& kernels, const NoiseBundle& noise,
                             Method method) {
  const int n = params.RequireN();
  const int steps = noise.grid.steps();
  if (noise.players != n ||
      static_cast<int>(noise.initials.size()) != n ||
      static_cast<int>(noise.common.size()) != steps ||
      noise.idio.size() != static_cast<size_t>(steps) * n) {
    throw ConfigError("noise", "bundle dimensions do not match N and grid");
  }
  if (!table.has_nplayer()) throw ConfigError("N", "table lacks a1N");
  const int stride = GridStride(table.grid, noise.grid);
  const double dt = noise.grid.dt();

  PathEnsemble e;
  e.grid = noise.grid;
  e.players = n;
  e.method = method;
  e.states.resize(static_cast<size_t>(steps + 1) * n);
  e.controls.resize(e.states.size());
  e.common.resize(steps + 1);
  e.idio_mean.resize(steps + 1);
  std::copy(noise.initials.begin(), noise.initials.end(), e.states.begin());
  const double xbar0 = Mean(noise.initials);

  std::vector<double> y;
  if (method == Method::kExact) {
    RequireIntegrals(noise);
    if (!kernels.has_nplayer()) throw ConfigError("N", "kernels lack a_hat");
    GridStride(kernels.grid, noise.grid);
    y.resize(n);
    for (int i = 0; i < n; ++i) y[i] = noise.initials[i] - xbar0;
  }

  for (int m = 0; m <= steps; ++m) {
    const int f = m * stride;
    double* x = e.states.data() + static_cast<size_t>(m) * n;
    double* u = e.controls.data() + static_cast<size_t>(m) * n;
    const double xbar = Mean({x, static_cast<size_t>(n)});
    for (int i = 0; i < n; ++i) u[i] = -2.0 * table.aHatN[f] * (x[i] - xbar);
    if (m == 0 && method == Method::kEuler) {
      // Drift as written (mean of the other players) versus the rewrite.
      for (int i = 0; i < n; ++i) {
        const double others = (n * xbar - x[i]) / (n - 1);
        const double direct = -2.0 * table.a1N[f] * (x[i] - others);
        if (std::abs(direct - u[i]) > 1e-12 * std::max(1.0, std::abs(direct))) {
          throw std::logic_error("N-player drift forms disagree");
        }
      }
    }
    if (m == steps) break;

    const double* dw = noise.idio.data() + static_cast<size_t>(m) * n;
    const double wbar = Mean({dw, static_cast<size_t>(n)});
    e.common[m + 1] = e.common[m] + noise.common[m];
    e.idio_mean[m + 1] = e.idio_mean[m] + wbar;
    double* next = x + n;
    if (method == Method::kEuler) {
      for (int i = 0; i < n; ++i) {
        next[i] = x[i] + u[i] * dt + dw[i] + noise.common[m];
      }
      continue;
    }
    const double* jh = noise.j_hat.data() + static_cast<size_t>(m) * n;
    const double jbar = Mean({jh, static_cast<size_t>(n)});
    const double xbar_next = xbar0 + e.idio_mean[m + 1] + e.common[m + 1];
    const double inv_e = 1.0 / kernels.e2a_hat[f + stride];
    for (int i = 0; i < n; ++i) {
      y[i] += jh[i] - jbar;
      next[i] = y[i] * inv_e + xbar_next;
    }
  }
  return e;
}

void WritePathCsv(const PathEnsemble& ensemble, std::ostream& out) {
  out << "t,player,state,control\n";
  char buf[128];
  for (int m = 0; m < ensemble.grid.size(); ++m) {
    for (int i = 0; i < ensemble.players; ++i) {
      const size_t c = static_cast<size_t>(m) * ensemble.players + i;
      std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g\n",
                    ensemble.grid.t(m), i, ensemble.states[c],
                    ensemble.controls[c]);
      out << buf;
    }
  }
}

DeltaDecomposition ComputeDelta(const ModelParams& params,
                                const OuKernel& kernels,
                                const NoiseBundle& noise) {
  RequireIntegrals(noise);
  if (!kernels.has_nplayer()) throw ConfigError("N", "kernels lack a_hat");
  const int stride = GridStride(kernels.grid, noise.grid);
  const int n = noise.players, steps = noise.grid.steps();
  const double m0 = params.initial_law.Mean();
  const double xbar0 = Mean(noise.initials);

  DeltaDecomposition d;
  d.grid = noise.grid;
  d.players = n;
  d.i_term.resize(static_cast<size_t>(steps + 1) * n);
  d.delta.resize(d.i_term.size());
  d.ii_term.resize(steps + 1);
  d.iii_term.resize(steps + 1);
  d.iv_term.resize(steps + 1);

  std::vector<double> cum_hat(n, 0.0), cum_mfg(n, 0.0);
  double w_common = 0.0, w_bar = 0.0, j_bar = 0.0;
  for (int m = 0; m <= steps; ++m) {
    const int f = m * stride;
    const double eh = kernels.e2a_hat[f], ea = kernels.e2a[f];
    d.ii_term[m] = -j_bar;
    d.iii_term[m] = (eh - ea) * (m0 + w_common);
    d.iv_term[m] = eh * (xbar0 - m0 + w_bar);
    const double shared = d.ii_term[m] + d.iii_term[m] + d.iv_term[m];
    for (int i = 0; i < n; ++i) {
      const size_t c = static_cast<size_t>(m) * n + i;
      d.i_term[c] = cum_hat[i] - cum_mfg[i];
      d.delta[c] = d.i_term[c] + shared;
    }
    if (m == steps) break;
    const size_t row = static_cast<size_t>(m) * n;
    double sum_hat = 0.0, sum_w = 0.0;
    for (int i = 0; i < n; ++i) {
      cum_hat[i] += noise.j_hat[row + i];
      cum_mfg[i] += noise.j_mfg[row + i];
      sum_hat += noise.j_hat[row + i];
      sum_w += noise.idio[row + i];
    }
    j_bar += sum_hat / n;
    w_bar += sum_w / n;
    w_common += noise.common[m];
  }
  return d;
}

DeltaSups SupSquares(const DeltaDecomposition& d, int player) {
  DeltaSups s;
  for (int m = 0; m < d.grid.size(); ++m) {
    const size_t c = static_cast<size_t>(m) * d.players + player;
    s.delta = std::max(s.delta, d.delta[c] * d.delta[c]);
    s.i = std::max(s.i, d.i_term[c] * d.i_term[c]);
    s.ii = std::max(s.ii, d.ii_term[m] * d.ii_term[m]);
    s.iii = std::max(s.iii, d.iii_term[m] * d.iii_term[m]);
    s.iv = std::max(s.iv, d.iv_term[m] * d.iv_term[m]);
  }
  return s;
}

}  // namespace lqgmfg
