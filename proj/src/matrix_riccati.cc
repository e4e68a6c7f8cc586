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

#include "lqgmfg/matrix_riccati.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lqgmfg/errors.h"

namespace lqgmfg {
namespace {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Spread {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  int count = 0;
  void Add(double x) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
    ++count;
  }
  double Mean() const { return count ? sum / count : 0.0; }
  double Width() const { return count ? hi - lo : 0.0; }
};

}  // namespace

MatrixXd MatrixRiccatiSolution::A(int player, int node) const {
  const int n = players_;
  const double* base = trajectory_.At(node).data() + player * block();
  return Map<const MatrixXd>(base, n, n);
}

VectorXd MatrixRiccatiSolution::B(int player, int node) const {
  const int n = players_;
  const double* base = trajectory_.At(node).data() + player * block() + n * n;
  return Map<const VectorXd>(base, n);
}

double MatrixRiccatiSolution::C(int player, int node) const {
  const int n = players_;
  return trajectory_.At(node)[player * block() + n * n + n];
}

MatrixRiccatiSolution SolveFullMatrixRiccati(int N, const ModelParams& params,
                                             const TimeGrid& grid,
                                             double magnitude_cap) {
  params.Validate();
  if (N < 2 || N > kMaxMatrixRiccatiPlayers) {
    throw ConfigError("N", "matrix Riccati oracle needs 2<=N<=8");
  }
  if (grid.steps() < 2048) {
    throw ConfigError("steps", "matrix Riccati oracle needs steps>=2048");
  }
  const double k = params.k;
  const int block = N * N + N + 1;

  // Constant source term (k/N) sum_{j != i} (e_i - e_j)(e_i - e_j)'.
  std::vector<MatrixXd> source(N, MatrixXd::Zero(N, N));
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      source[i](i, i) += k / N;
      source[i](j, j) += k / N;
      source[i](i, j) -= k / N;
      source[i](j, i) -= k / N;
    }
  }

  auto field = [N, block, &source](double, std::span<const double> v,
                                   std::span<double> dv) {
    std::vector<Map<const MatrixXd>> A;
    std::vector<Map<const VectorXd>> B;
    A.reserve(N);
    B.reserve(N);
    for (int i = 0; i < N; ++i) {
      A.emplace_back(v.data() + i * block, N, N);
      B.emplace_back(v.data() + i * block + N * N, N);
    }
    // Column j of G is A_j e_j: player j's own feedback row.
    MatrixXd G(N, N);
    for (int j = 0; j < N; ++j) G.col(j) = A[j].col(j);

    for (int i = 0; i < N; ++i) {
      Map<MatrixXd> dA(dv.data() + i * block, N, N);
      Map<VectorXd> dB(dv.data() + i * block + N * N, N);
      double& dC = dv[i * block + N * N + N];

      // 2 A_i e_i e_i' A_i + 4 sum_{j != i} A_j e_j e_j' A_i
      //   = 4 G A_i - 2 g_i (row i of A_i).
      MatrixXd M = 4.0 * G * A[i] - 2.0 * G.col(i) * A[i].row(i);
      dA = 0.5 * (M + M.transpose()) - source[i];

      VectorXd b = 2.0 * G.col(i) * B[i](i);
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        b += 2.0 * (A[i].col(j) * B[j](j) + G.col(j) * B[i](j));
      }
      dB = b;

      double c = 0.5 * B[i](i) * B[i](i) - 2.0 * A[i].trace();
      for (int j = 0; j < N; ++j) {
        if (j != i) c += B[j](j) * B[i](j);
      }
      dC = c;
    }
  };

  BackwardOptions options;
  options.magnitude_cap = magnitude_cap;
  options.project = [N, block](std::span<double> v) {
    for (int i = 0; i < N; ++i) {
      Map<MatrixXd> A(v.data() + i * block, N, N);
      const MatrixXd sym = 0.5 * (A + A.transpose());
      A = sym;
    }
  };
  std::vector<double> terminal(static_cast<size_t>(N) * block, 0.0);
  return MatrixRiccatiSolution(
      N, IntegrateBackward(field, terminal, grid, options));
}

PatternCoefficients ExtractPattern(const MatrixRiccatiSolution& sol,
                                   int player) {
  const int N = sol.players();
  if (player < 0 || player >= N) throw ConfigError("i", "player out of range");
  PatternCoefficients out;
  const int size = sol.grid().size();
  out.a1.resize(size);
  out.a2.resize(size);
  out.a3.resize(size);
  if (N >= 3) out.a4.resize(size);

  for (int node = 0; node < size; ++node) {
    const MatrixXd A = sol.A(player, node);
    Spread diag_other, cross, rest;
    for (int p = 0; p < N; ++p) {
      for (int q = 0; q < N; ++q) {
        if (p == player && q == player) continue;
        if (p == q) {
          diag_other.Add(A(p, q));
        } else if (p == player || q == player) {
          cross.Add(A(p, q));
        } else {
          rest.Add(A(p, q));
        }
      }
    }
    out.a1[node] = A(player, player);
    out.a2[node] = diag_other.Mean();
    out.a3[node] = cross.Mean();
    if (N >= 3) out.a4[node] = rest.Mean();
    out.max_pattern_deviation =
        std::max({out.max_pattern_deviation, diag_other.Width(), cross.Width(),
                  rest.Width()});
  }
  return out;
}

double SupAbsB(const MatrixRiccatiSolution& sol) {
  double m = 0.0;
  for (int node = 0; node < sol.grid().size(); ++node) {
    for (int i = 0; i < sol.players(); ++i) {
      m = std::max(m, sol.B(i, node).cwiseAbs().maxCoeff());
    }
  }
  return m;
}

double A3EquationGap(const PatternCoefficients& pattern, int N, double k) {
  if (N < 3 || pattern.a4.empty()) {
    throw ConfigError("N", "a3 equation pair needs N>=3");
  }
  double gap = 0.0;
  const double n = N;
  for (size_t j = 0; j < pattern.a1.size(); ++j) {
    const double a1 = pattern.a1[j], a2 = pattern.a2[j], a3 = pattern.a3[j],
                 a4 = pattern.a4[j];
    const double first = 2 * a1 * a3 + 4 * a1 * a3 + 4 * (n - 2) * a3 * a3 +
                         k / n;
    const double second = 2 * a1 * a3 + 4 * a2 * a3 +
                          4 * (n - 2) * a3 * a4 + k / n;
    gap = std::max(gap, std::abs(first - second));
  }
  return gap;
}

}  // namespace lqgmfg
