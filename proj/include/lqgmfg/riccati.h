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

// Deterministic coefficients of the mean-field and N-player equilibria.
//
// Mean-field value function v = a x^2 + b mu^2 + c nu + d with
//   a' = 2a^2 - k,  b' = 2a^2 - 4ac,  c' = 4ac - k,  d' = -(b + 2c),
// all vanishing at T. The N-player feedback gain a1N solves
//   a1' = 2(N+1)/(N-1) a1^2 - (N-1)/N k,
// and the companion diagonal coefficient a2N a linear ODE driven by a1N.

#ifndef LQGMFG_RICCATI_H_
#define LQGMFG_RICCATI_H_

#include <optional>
#include <ostream>
#include <vector>

#include "lqgmfg/model.h"

namespace lqgmfg {

struct RiccatiTable {
  TimeGrid grid;
  std::vector<double> a, b, c, d;
  // Present only when an N was supplied.
  std::vector<double> a1N, a2N, aHatN;

  bool has_nplayer() const { return !a1N.empty(); }
};

// Closed forms as functions of continuous time.
double AClosed(double k, double T, double t);
double A1NClosed(double k, double T, int N, double t);
double AHatNClosed(double k, double T, int N, double t);

// a(t_j) on the grid.
std::vector<double> SolveAClosed(const ModelParams& params,
                                 const TimeGrid& grid);

// a, b, c, d; b, c, d by composite Simpson of their integral representations.
// Throws QuadratureError if the ODE residual check exceeds `residual_tol`.
RiccatiTable SolveMfgSystem(const ModelParams& params, const TimeGrid& grid,
                            double residual_tol = 1e-3);

// Fills a1N (closed form), a2N (backward RK4) and aHatN = N/(N-1) a1N.
void SolveNPlayerSystem(const ModelParams& params, RiccatiTable& table);

// Convenience: both parts.
RiccatiTable SolveRiccati(const ModelParams& params, const TimeGrid& grid);

// Sup over interior nodes of |central difference of d + b + 2c| and of the
// analogous residuals of the b and c equations.
struct MfgResiduals {
  double b = 0.0, c = 0.0, d = 0.0;
};
MfgResiduals MfgSystemResiduals(const RiccatiTable& table, double k);

// CSV with columns t,a,b,c,d[,a1N,a2N,aHatN]; 17 significant digits.
void WriteRiccatiCsv(const RiccatiTable& table, std::ostream& out);

// The seven-function system obtained after substituting the fixed-point
// identities for w1..w6, integrated without assuming g = -2a, e = f = 0.
struct SevenSystemTable {
  TimeGrid grid;
  std::vector<double> a, b, c, d, e, f, g;
  double sup_two_a_plus_g = 0.0;
  double sup_abs_e = 0.0;
  double sup_abs_f = 0.0;
};

// w1 = -2a - g, w2 = -e, w3 = -2e, w4 = -4a, w5 = -2g, w6 = 2.
struct ReducedCoefficients {
  std::vector<double> w1, w2, w3, w4, w5, w6;
};

struct SevenSystemResult {
  SevenSystemTable table;
  ReducedCoefficients w;
};

SevenSystemResult SolveSevenSystem(const ModelParams& params,
                                   const TimeGrid& grid);

}  // namespace lqgmfg

#endif  // LQGMFG_RICCATI_H_
