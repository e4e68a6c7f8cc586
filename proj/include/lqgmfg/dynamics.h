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


// Equilibrium paths of the mean-field game and of the N-player game.
//
// Both equilibria are Ornstein-Uhlenbeck processes around a mean driven by
// the common noise. With E_t(r) = exp(int_0^t r) the deviation
// Y = E_t(2a) (X - mu) satisfies dY = E_t(2a) dW, so the state at any time is
// an explicit Gaussian functional of the noise. The exact simulators sample
// (dW, int E(2a_hat) dW, int E(2a) dW) jointly per interval; Euler runs the
// SDE as written with the same Brownian increments.

#ifndef LQGMFG_DYNAMICS_H_
#define LQGMFG_DYNAMICS_H_

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lqgmfg/model.h"
#include "lqgmfg/riccati.h"
#include "lqgmfg/rng.h"
#include "lqgmfg/transport.h"

namespace lqgmfg {

struct OuKernel {
  TimeGrid grid;
  std::vector<double> a, a_hat;  // copied from the table; a_hat may be empty
  std::vector<double> e2a;     // E_t(2a)
  std::vector<double> sigma2;  // int_0^t E_s(4a) ds
  // Same pair for a_hat^N; empty when the table has no N-player part.
  std::vector<double> e2a_hat;
  std::vector<double> sigma2_hat;

  bool has_nplayer() const { return !e2a_hat.empty(); }
};

// Simpson quadrature of int a and int E^2 on the table grid.
OuKernel BuildKernels(const RiccatiTable& table);

// v_t = E_t(2a)^-2 (Var X_0 + sigma_t^2) at a kernel node.
double ConditionalVariance(const OuKernel& kernels, int node, double var0);

// Number of kernel steps per step of `coarse`; throws ConfigError unless the
// horizons match and the step counts divide.
int GridStride(const TimeGrid& fine, const TimeGrid& coarse);

// Covariance of (dW, int E(2a_hat) dW, int E(2a) dW) over each step of a
// simulation grid nested in the kernel grid. Within a kernel step log E is
// the cubic Hermite interpolant of its node values and slopes 2a; the
// moments are then integrated by 4-point Gauss-Legendre.
// Without an N-player part the second integral is a copy of the third.
class ExactNoiseModel {
 public:
  ExactNoiseModel(const OuKernel& kernels, const TimeGrid& sim_grid);

  const TimeGrid& grid() const { return grid_; }
  bool distinct_hat() const { return distinct_hat_; }
  // Row-major lower triangle (l00, l10, l11, l20, l21, l22) of a Cholesky
  // factor; negative pivots from rounding are clamped to zero.
  const std::array<double, 6>& Factor(int step) const { return factors_[step]; }

 private:
  TimeGrid grid_;
  bool distinct_hat_;
  std::vector<std::array<double, 6>> factors_;
};

// One replication's randomness. Step-major: entry [m * players + i].
struct NoiseBundle {
  TimeGrid grid{1.0, 1};
  int players = 0;
  std::vector<double> initials;  // X_{i,0}
  std::vector<double> common;    // common-noise increments, one per step
  std::vector<double> idio;      // dW_i per step
  // Per-step Wiener integrals of E(2a_hat) and E(2a) against W_i; empty
  // unless drawn through an ExactNoiseModel.
  std::vector<double> j_hat;
  std::vector<double> j_mfg;
  std::uint64_t master_seed = 0;
  std::string tag;
  std::int64_t n = 0;
  std::int64_t replication = 0;

  bool has_integrals() const { return !j_hat.empty(); }
};

// Draw order: N initials, then per step the common increment followed by
// each player's (dW, J_hat, J_mfg) or dW alone when `model` is null.
NoiseBundle GenerateNoise(const TimeGrid& grid, const ExactNoiseModel* model,
                          const InitialLaw& law, int players,
                          const StreamId& id);

// Sums blocks of `factor` consecutive steps.
NoiseBundle Coarsen(const NoiseBundle& noise, int factor);

struct MfgPath {
  TimeGrid grid{1.0, 1};
  std::vector<double> x, mu, controls;
};

// Explicit Euler for one representative player; `table` supplies a on a grid
// that nests `grid`.
MfgPath SimulateMfgEuler(const ModelParams& params, const RiccatiTable& table,
                         const TimeGrid& grid, double x0,
                         std::span<const double> common,
                         std::span<const double> idio);
MfgPath SimulateMfgEuler(const ModelParams& params, const RiccatiTable& table,
                         const TimeGrid& grid, RandomStream& rng);

// Exact mean-field path of player `i` driven by the bundle's W_i.
MfgPath ExactMfgPath(const ModelParams& params, const OuKernel& kernels,
                     const NoiseBundle& noise, int i);

// Euler cross-section of `copies` independent players sharing one common
// path. Returns states at each node in `nodes` (indices into `grid`).
std::vector<std::vector<double>> SimulateMfgEulerCrossSection(
    const ModelParams& params, const RiccatiTable& table, const TimeGrid& grid,
    std::span<const double> common, int copies, RandomStream& rng,
    std::span<const int> nodes);

// Exact draws of X_t given W~_t = common_shift at kernel node `node`.
EmpiricalMeasure1D ExactSampleMfg(const ModelParams& params,
                                  const OuKernel& kernels, int node,
                                  double common_shift, int count,
                                  RandomStream& rng);

struct ConditionalLaw {
  double mean = 0.0;  // m_0 + common shift
  double shift = 0.0;
  double var = 0.0;
  // Present when the initial law is not gaussian: draws at shift 0.
  std::optional<EmpiricalMeasure1D> reference;

  Law1D ToLaw() const;
};

inline constexpr int kReferenceSamplesPerPlayer = 100;

// Law of X_t given the common noise. Gaussian initial laws are exact; others
// use `reference_size` exact draws from `rng`.
ConditionalLaw ConditionalLawAt(const ModelParams& params,
                                const OuKernel& kernels, int node,
                                double common_shift, int reference_size,
                                RandomStream& rng);

enum class Method { kEuler, kExact };
std::string MethodName(Method m);

struct PathEnsemble {
  TimeGrid grid{1.0, 1};
  int players = 0;
  Method method = Method::kExact;
  std::vector<double> states;    // (steps + 1) x players, step-major
  std::vector<double> controls;  // same layout
  std::vector<double> common;    // W~ at each node
  std::vector<double> idio_mean; // W-bar at each node

  double State(int node, int i) const { return states[node * players + i]; }
  std::span<const double> CrossSection(int node) const {
    return {states.data() + static_cast<size_t>(node) * players,
            static_cast<size_t>(players)};
  }
};

// N-player equilibrium driven by `noise`. The exact method needs integrals
// in the bundle and kernels with an N-player part.
PathEnsemble SimulateNPlayer(const ModelParams& params,
                             const RiccatiTable& table,
                             const OuKernel& kernels, const NoiseBundle& noise,
                             Method method);

// CSV columns t,player,state,control.
void WritePathCsv(const PathEnsemble& ensemble, std::ostream& out);

struct DeltaDecomposition {
  TimeGrid grid{1.0, 1};
  int players = 0;
  // Per player, step-major like PathEnsemble; II, III, IV per node only.
  std::vector<double> i_term, delta;
  std::vector<double> ii_term, iii_term, iv_term;

  double Delta(int node, int i) const { return delta[node * players + i]; }
};

DeltaDecomposition ComputeDelta(const ModelParams& params,
                                const OuKernel& kernels,
                                const NoiseBundle& noise);

// sup over nodes of each squared term for player `i`.
struct DeltaSups {
  double delta = 0.0, i = 0.0, ii = 0.0, iii = 0.0, iv = 0.0;
};
DeltaSups SupSquares(const DeltaDecomposition& d, int player);

}  // namespace lqgmfg

#endif  // LQGMFG_DYNAMICS_H_
