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


// Monte Carlo studies of the N-player to mean-field convergence rates.
//
// Every replication draws from its own counter-based stream keyed by
// (seed, tag, N, replication) and writes into its own slot, so results do
// not depend on the number of workers.

#ifndef LQGMFG_EXPERIMENTS_H_
#define LQGMFG_EXPERIMENTS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lqgmfg/dynamics.h"
#include "lqgmfg/model.h"

namespace lqgmfg {

struct ExperimentConfig {
  ModelParams params;
  std::vector<int> n_schedule{8, 16, 32, 64, 128, 256, 512, 1024};
  int replications = 200;
  std::vector<double> checkpoints;  // empty means {T}
  std::vector<double> p_list{1.0};
  std::uint64_t seed = 0;
  Method method = Method::kExact;
  int sup_nodes = 64;
  int riccati_steps = 1024;
  int reference_factor = kReferenceSamplesPerPlayer;
  int reference_floor = 500;
  int bootstrap_resamples = 2000;
  int workers = 1;

  // N_schedule ascending with >= 4 entries, R >= 50, p in [1, 2], ...
  void Validate() const;
  std::vector<double> Checkpoints() const;
};

struct RateEstimate {
  std::string label;
  double p = 1.0;
  double t = 0.0;
  std::vector<int> ns;
  std::vector<double> means, std_errors;
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
};

// OLS of ln(mean) on ln(N). With `samples` (per N, replication values) the
// CI comes from resampling replications; otherwise from a parametric
// bootstrap with the standard errors.
RateEstimate FitRate(const std::vector<int>& ns,
                     const std::vector<double>& means,
                     const std::vector<double>& std_errors,
                     const std::vector<std::vector<double>>* samples = nullptr,
                     std::uint64_t seed = 0, int resamples = 2000);

struct RawRecord {
  std::string experiment;
  double p = 0.0;
  double t = 0.0;
  int n = 0;
  int replication = 0;
  double value = 0.0;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<RateEstimate> estimates;
  std::vector<RawRecord> raw;
  // Named scalar diagnostics in insertion order (identity gaps, ...).
  std::vector<std::pair<std::string, double>> diagnostics;
};

// Runs body(i) for i in [0, count) on `workers` threads.
void ParallelFor(int count, int workers, const std::function<void(int)>& body);

// Marginal distance of one player. Gaussian initial laws use the exact
// marginal variances; other laws require R >= 1e4 and compare two empirical
// samples.
ExperimentResult RunQ1(const ExperimentConfig& config);

struct VarianceCheck {
  double formula = 0.0;
  double sample = 0.0;
  double std_error = 0.0;
};
// Sample variance of X_1 at time t from exact N-player runs versus the
// closed-form marginal variance.
VarianceCheck ValidateNPlayerVariance(const ExperimentConfig& config, int n,
                                      int replications, double t);

// E W_p^p between the N-player cross-section and the conditional mean-field
// law, per (t, p).
ExperimentResult RunQ2(const ExperimentConfig& config);

// E max over the positive nodes of a `sup_nodes`-step grid.
ExperimentResult RunQ3(const ExperimentConfig& config);

// i.i.d. standard normal samples against their law; d = 1 for each p and a
// d = 2 lower-bound proxy (max over projection directions, p = 1).
ExperimentResult RunIidBaseline(const ExperimentConfig& config);

// X_i = gamma_i + sigma alpha_i + beta with correlated gaussian pairs.
ExperimentResult RunCommonNoiseSequence(const ExperimentConfig& config);

// Delta terms: N E[sup Delta_1^2] and the component sups, per N.
ExperimentResult RunDeltaScaling(const ExperimentConfig& config);

// Trapezoid rule of 1/2 u_i^2 + (k/N) sum_j (x_i - x_j)^2 along the path.
double EvaluateNPlayerCost(const PathEnsemble& ensemble,
                           std::span<const double> controls,
                           const ModelParams& params, int player);

enum class NashStatus { kPass, kFail, kInconclusive };
std::string NashStatusName(NashStatus s);

struct CostReport {
  std::vector<double> epsilons;
  std::vector<double> cost, cost_se;
  double c0 = 0, c1 = 0, c2 = 0;
  double c0_se = 0, c1_se = 0, c2_se = 0;
  // Mean and SE of J(eps) - J(-eps) at the largest |eps|.
  double antisymmetric = 0, antisymmetric_se = 0;
  int replications = 0;
  int steps = 0;
  NashStatus status = NashStatus::kInconclusive;
};

struct NashConfig {
  ModelParams params;  // N <= 8
  std::vector<double> epsilons{-0.2, -0.1, 0.0, 0.1, 0.2};
  int replications = 20000;
  int min_replications = 100;
  int steps = 1024;
  std::uint64_t seed = 0;
  int workers = 1;

  void Validate() const;
};

// Player 0 scales its equilibrium feedback by (1 + eps); common random
// numbers across eps; Euler on `steps` steps.
CostReport NashDeviationCheck(const NashConfig& config);

// experiment,p,t,N,replication,value with 17 significant digits.
void WriteRawCsv(const std::vector<RawRecord>& raw, std::ostream& out);

}  // namespace lqgmfg

#endif  // LQGMFG_EXPERIMENTS_H_
