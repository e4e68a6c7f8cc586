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

#include "lqgmfg/riccati.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "lqgmfg/errors.h"
#include "lqgmfg/ode.h"

namespace lqgmfg {
namespace {

// log(cosh(x)) without overflow.
double LogCosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
}

// Integral of a over [0, t]: a = sqrt(k/2) tanh(r (T - t)) with r = sqrt(2k)
// integrates to (1/2) log(cosh(r T) / cosh(r (T - t))).
double AIntegral(double k, double T, double t) {
  const double r = std::sqrt(2.0 * k);
  return 0.5 * (LogCosh(r * T) - LogCosh(r * (T - t)));
}

double SupAbs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double AClosed(double k, double T, double t) {
  return std::sqrt(0.5 * k) * std::tanh(std::sqrt(2.0 * k) * (T - t));
}

double A1NClosed(double k, double T, int N, double t) {
  const double n = N;
  const double level = std::sqrt(0.5 * k * (n - 1) * (n - 1) / (n * (n + 1)));
  const double rate = std::sqrt(2.0 * (n + 1) * k / n);
  return level * std::tanh(rate * (T - t));
}

double AHatNClosed(double k, double T, int N, double t) {
  return static_cast<double>(N) / (N - 1) * A1NClosed(k, T, N, t);
}

std::vector<double> SolveAClosed(const ModelParams& params,
                                 const TimeGrid& grid) {
  params.Validate();
  std::vector<double> a(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    a[j] = AClosed(params.k, grid.horizon(), grid.t(j));
  }
  return a;
}

RiccatiTable SolveMfgSystem(const ModelParams& params, const TimeGrid& grid,
                            double residual_tol) {
  const double k = params.k;
  const double T = grid.horizon();
  const double h = grid.dt();
  const int size = grid.size();

  RiccatiTable table{grid, SolveAClosed(params, grid), {}, {}, {}, {}, {}, {}};
  const std::vector<double>& a = table.a;

  // c(t) = k exp(4 A(t)) * integral_t^T exp(-4 A(s)) ds, A = integral of a.
  std::vector<double> decay(size), a_int(size);
  for (int j = 0; j < size; ++j) {
    a_int[j] = AIntegral(k, T, grid.t(j));
    decay[j] = std::exp(-4.0 * a_int[j]);
  }
  const std::vector<double> decay_tail = TailIntegral(decay, h);
  table.c.resize(size);
  for (int j = 0; j < size; ++j) {
    table.c[j] = k * std::exp(4.0 * a_int[j]) * decay_tail[j];
  }
  table.c.back() = 0.0;

  std::vector<double> b_integrand(size);
  for (int j = 0; j < size; ++j) {
    b_integrand[j] = 4.0 * a[j] * table.c[j] - 2.0 * a[j] * a[j];
  }
  table.b = TailIntegral(b_integrand, h);

  std::vector<double> d_integrand(size);
  for (int j = 0; j < size; ++j) d_integrand[j] = table.b[j] + 2.0 * table.c[j];
  table.d = TailIntegral(d_integrand, h);

  if (size >= 3) {
    const MfgResiduals res = MfgSystemResiduals(table, k);
    const double worst = std::max({res.b, res.c, res.d});
    if (!(worst <= residual_tol)) {
      throw QuadratureError(worst, "Riccati quadrature failed residual check");
    }
  }
  return table;
}

void SolveNPlayerSystem(const ModelParams& params, RiccatiTable& table) {
  const int N = params.RequireN();
  const double k = params.k;
  const double T = table.grid.horizon();
  const TimeGrid& grid = table.grid;
  const double n = N;

  table.a1N.resize(grid.size());
  table.aHatN.resize(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    table.a1N[j] = A1NClosed(k, T, N, grid.t(j));
    table.aHatN[j] = n / (n - 1) * table.a1N[j];
  }
  // a2' = -2/(N-1)^2 a1^2 + 4N/(N-1) a1 a2 - k/N, a1 evaluated in closed form.
  table.a2N = IntegrateBackwardScalar(
      [k, T, N, n](double t, double a2) {
        const double a1 = A1NClosed(k, T, N, t);
        return -2.0 / ((n - 1) * (n - 1)) * a1 * a1 +
               4.0 * n / (n - 1) * a1 * a2 - k / n;
      },
      0.0, grid);
}

RiccatiTable SolveRiccati(const ModelParams& params, const TimeGrid& grid) {
  params.Validate();
  RiccatiTable table = SolveMfgSystem(params, grid);
  if (params.N) SolveNPlayerSystem(params, table);
  return table;
}

MfgResiduals MfgSystemResiduals(const RiccatiTable& table, double k) {
  MfgResiduals res;
  const double h = table.grid.dt();
  const auto& a = table.a;
  const auto& b = table.b;
  const auto& c = table.c;
  const auto& d = table.d;
  for (int j = 1; j + 1 < table.grid.size(); ++j) {
    const double db = (b[j + 1] - b[j - 1]) / (2 * h);
    const double dc = (c[j + 1] - c[j - 1]) / (2 * h);
    const double dd = (d[j + 1] - d[j - 1]) / (2 * h);
    res.b = std::max(res.b, std::abs(db - 2 * a[j] * a[j] + 4 * a[j] * c[j]));
    res.c = std::max(res.c, std::abs(dc - 4 * a[j] * c[j] + k));
    res.d = std::max(res.d, std::abs(dd + b[j] + 2 * c[j]));
  }
  return res;
}

void WriteRiccatiCsv(const RiccatiTable& table, std::ostream& out) {
  const bool np = table.has_nplayer();
  out << "t,a,b,c,d";
  if (np) out << ",a1N,a2N,aHatN";
  out << "\n";
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf;
  };
  for (int j = 0; j < table.grid.size(); ++j) {
    put(table.grid.t(j));
    for (const auto* col : {&table.a, &table.b, &table.c, &table.d}) {
      out << ',';
      put((*col)[j]);
    }
    if (np) {
      for (const auto* col : {&table.a1N, &table.a2N, &table.aHatN}) {
        out << ',';
        put((*col)[j]);
      }
    }
    out << '\n';
  }
}

SevenSystemResult SolveSevenSystem(const ModelParams& params,
                                   const TimeGrid& grid) {
  params.Validate();
  const double k = params.k;
  // State order: a, b, c, d, e, f, g.
  const std::array<double, 7> terminal{};
  Trajectory traj = IntegrateBackward(
      [k](double, std::span<const double> v, std::span<double> dv) {
        const double a = v[0], b = v[1], c = v[2], e = v[4], f = v[5],
                     g = v[6];
        dv[0] = 2 * a * a - k;
        dv[1] = 0.5 * g * g + 4 * a * b + 2 * b * g + 2 * c * g;
        dv[2] = 4 * a * c - k;
        dv[3] = 0.5 * e * e + e * f - 2 * c - 2 * a - b - g;
        dv[4] = 2 * a * e + e * g;
        dv[5] = e * g + 2 * a * f + g * f + 2 * b * e + 2 * c * e;
        dv[6] = 4 * a * g + g * g + 2 * k;
      },
      terminal, grid);

  SevenSystemResult out{SevenSystemTable{grid, traj.Component(0),
                                         traj.Component(1), traj.Component(2),
                                         traj.Component(3), traj.Component(4),
                                         traj.Component(5), traj.Component(6)},
                        {}};
  SevenSystemTable& s = out.table;
  const int size = grid.size();
  std::vector<double> l(size);
  for (int j = 0; j < size; ++j) l[j] = 2 * s.a[j] + s.g[j];
  s.sup_two_a_plus_g = SupAbs(l);
  s.sup_abs_e = SupAbs(s.e);
  s.sup_abs_f = SupAbs(s.f);

  ReducedCoefficients& w = out.w;
  for (auto* v : {&w.w1, &w.w2, &w.w3, &w.w4, &w.w5, &w.w6}) v->resize(size);
  for (int j = 0; j < size; ++j) {
    w.w1[j] = -2 * s.a[j] - s.g[j];
    w.w2[j] = -s.e[j];
    w.w3[j] = -2 * s.e[j];
    w.w4[j] = -4 * s.a[j];
    w.w5[j] = -2 * s.g[j];
    w.w6[j] = 2.0;
  }
  return out;
}

}  // namespace lqgmfg
