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

// Full coupled Riccati system of the N-player game, v_i = x'A_i x + x'B_i + C_i.
// Only used as an oracle for the four-coefficient pattern of A_i, so N is
// capped at kMaxMatrixRiccatiPlayers.

#ifndef LQGMFG_MATRIX_RICCATI_H_
#define LQGMFG_MATRIX_RICCATI_H_

#include <vector>

#include <Eigen/Dense>

#include "lqgmfg/model.h"
#include "lqgmfg/ode.h"

namespace lqgmfg {

inline constexpr int kMaxMatrixRiccatiPlayers = 8;

class MatrixRiccatiSolution {
 public:
  MatrixRiccatiSolution(int players, Trajectory trajectory)
      : players_(players), trajectory_(std::move(trajectory)) {}

  int players() const { return players_; }
  const TimeGrid& grid() const { return trajectory_.grid(); }

  Eigen::MatrixXd A(int player, int node) const;
  Eigen::VectorXd B(int player, int node) const;
  double C(int player, int node) const;

 private:
  int block() const { return players_ * players_ + players_ + 1; }

  int players_;
  Trajectory trajectory_;
};

// Backward RK4 of all A_i, B_i, C_i simultaneously; A_i symmetrized at every
// stage. Requires 2 <= N <= 8 and grid.steps() >= 2048. Throws
// DivergenceError when an entry exceeds `magnitude_cap`.
MatrixRiccatiSolution SolveFullMatrixRiccati(int N, const ModelParams& params,
                                             const TimeGrid& grid,
                                             double magnitude_cap = 1e6);

struct PatternCoefficients {
  // (A_i)_ii, (A_i)_jj, (A_i)_ij and (A_i)_jl for j, l != i, j != l.
  std::vector<double> a1, a2, a3, a4;  // a4 empty when N == 2
  // Largest spread, over nodes, among entries the pattern declares equal.
  double max_pattern_deviation = 0.0;
};

PatternCoefficients ExtractPattern(const MatrixRiccatiSolution& sol,
                                   int player);

// sup over nodes and players of max |B_i|.
double SupAbsB(const MatrixRiccatiSolution& sol);

// The two ODEs for a3 must have equal right-hand sides; returns the sup of
// their difference evaluated on the extracted coefficients (N >= 3).
double A3EquationGap(const PatternCoefficients& pattern, int N, double k);

}  // namespace lqgmfg

#endif  // LQGMFG_MATRIX_RICCATI_H_
