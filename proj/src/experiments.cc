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


#include "lqgmfg/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include <Eigen/Dense>

#include "lqgmfg/errors.h"
#include "lqgmfg/riccati.h"
#include "lqgmfg/transport.h"

namespace lqgmfg {
namespace {

struct Moments {
  double mean = 0.0, se = 0.0;
};

// Mean and standard error, summed in index order.
Moments MeanSe(std::span<const double> v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (n - 1) / n);
  }
  return m;
}

ModelParams WithN(const ModelParams& params, int n) {
  ModelParams p = params;
  p.N = n;
  return p;
}

std::string Fmt(const char* fmt, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

// Coarsest uniform grid, nested in the Riccati grid, containing `times`.
TimeGrid CoarsestGrid(double T, int riccati_steps,
                      const std::vector<double>& times) {
  for (int s = 1; s <= riccati_steps; ++s) {
    if (riccati_steps % s != 0) continue;
    bool ok = true;
    for (double t : times) {
      const double pos = t / T * s;
      if (std::abs(pos - std::round(pos)) > 1e-9 * s) ok = false;
    }
    if (ok) return TimeGrid(T, s);
  }
  throw ConfigError("checkpoints", "times must lie on the Riccati grid");
}

// Everything a replication needs for one N.
struct PathSetup {
  ModelParams params;
  RiccatiTable table;
  OuKernel kernels;
  TimeGrid sim;
  std::optional<ExactNoiseModel> model;

  PathSetup(const ExperimentConfig& config, int n, const TimeGrid& exact_grid)
      : params(WithN(config.params, n)),
        table(SolveRiccati(params,
                           TimeGrid(config.params.T, config.riccati_steps))),
        kernels(BuildKernels(table)),
        sim(config.method == Method::kExact ? exact_grid : table.grid) {
    if (config.method == Method::kExact) model.emplace(kernels, sim);
  }

  int stride() const { return GridStride(table.grid, sim); }

  PathEnsemble Simulate(const ExperimentConfig& config, int n, int rep) const {
    const NoiseBundle noise =
        GenerateNoise(sim, model ? &*model : nullptr, params.initial_law, n,
                      StreamId{config.seed, "path", n, rep});
    return SimulateNPlayer(params, table, kernels, noise, config.method);
  }
};

// Conditional laws at the given kernel nodes; reference samples for
// non-gaussian initial laws, one per (N, node).
struct LawSource {
  const ModelParams& params;
  const OuKernel& kernels;
  std::vector<int> kernel_nodes;
  std::vector<std::optional<EmpiricalMeasure1D>> references;
  std::vector<double> variances;

  LawSource(const ExperimentConfig& config, const ModelParams& p,
            const OuKernel& k, std::vector<int> nodes, int n)
      : params(p), kernels(k), kernel_nodes(std::move(nodes)) {
    const int size = config.reference_factor * n;
    for (int node : kernel_nodes) {
      RandomStream rng(config.seed, "reference", n, node);
      const ConditionalLaw law = ConditionalLawAt(params, kernels, node, 0.0,
                                                  size, rng);
      references.push_back(law.reference);
      variances.push_back(law.var);
    }
  }

  Law1D At(size_t c, double common_shift) const {
    ConditionalLaw law;
    law.shift = common_shift;
    law.mean = params.initial_law.Mean() + common_shift;
    law.var = variances[c];
    law.reference = references[c];
    return law.ToLaw();
  }
};

void RequireReferenceSize(const ExperimentConfig& config) {
  if (config.params.initial_law.is_gaussian()) return;
  if (config.reference_factor * config.n_schedule.front() <
      config.reference_floor) {
    throw ConfigError("reference_factor",
                      "reference sample smaller than reference_floor");
  }
}

void RequirePlayers(const ExperimentConfig& config, int min_n) {
  if (config.n_schedule.front() < min_n) {
    throw ConfigError("N_schedule", "N>=" + std::to_string(min_n) +
                                        " required for this experiment");
  }
}

double OlsSlope(std::span<const double> x, std::span<const double> y,
                double* intercept = nullptr, double* r2 = nullptr) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  if (intercept) *intercept = my - slope * mx;
  if (r2) {
    const double ss_res = syy - slope * sxy;
    *r2 = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  }
  return slope;
}

// Mean over replications per N, fitted, with the raw values kept.
RateEstimate Summarize(const std::string& label, double p, double t,
                       const std::vector<int>& ns,
                       const std::vector<std::vector<double>>& values,
                       const ExperimentConfig& config, std::int64_t tag) {
  std::vector<double> means, ses;
  for (const auto& v : values) {
    const Moments m = MeanSe(v);
    means.push_back(m.mean);
    ses.push_back(m.se);
  }
  RateEstimate est = FitRate(ns, means, ses, &values,
                             config.seed ^ static_cast<std::uint64_t>(tag),
                             config.bootstrap_resamples);
  est.label = label;
  est.p = p;
  est.t = t;
  return est;
}

}  // namespace

void ExperimentConfig::Validate() const {
  params.Validate();
  if (n_schedule.size() < 4) {
    throw ConfigError("N_schedule", "at least 4 entries required");
  }
  for (size_t i = 0; i < n_schedule.size(); ++i) {
    if (n_schedule[i] < 1) throw ConfigError("N_schedule", "N>=1 required");
    if (i > 0 && n_schedule[i] <= n_schedule[i - 1]) {
      throw ConfigError("N_schedule", "must be strictly ascending");
    }
  }
  if (replications < 50) throw ConfigError("replications", "R>=50 required");
  if (p_list.empty()) throw ConfigError("p", "at least one p required");
  for (double p : p_list) {
    if (!(p >= 1.0 && p <= 2.0)) throw ConfigError("p", "1<=p<=2 required");
  }
  if (riccati_steps < 2) throw ConfigError("riccati_steps", ">=2 required");
  if (sup_nodes < 1 || riccati_steps % sup_nodes != 0) {
    throw ConfigError("sup_nodes", "must divide riccati_steps");
  }
  if (reference_factor < 1) throw ConfigError("reference_factor", ">=1 required");
  if (bootstrap_resamples < 100) {
    throw ConfigError("bootstrap_resamples", ">=100 required");
  }
  if (workers < 1) throw ConfigError("workers", ">=1 required");
  const TimeGrid grid(params.T, riccati_steps);
  for (double t : Checkpoints()) {
    if (t < 0 || t > params.T) throw ConfigError("checkpoints", "0<=t<=T required");
    grid.IndexOf(t);
  }
}

std::vector<double> ExperimentConfig::Checkpoints() const {
  return checkpoints.empty() ? std::vector<double>{params.T} : checkpoints;
}

RateEstimate FitRate(const std::vector<int>& ns,
                     const std::vector<double>& means,
                     const std::vector<double>& std_errors,
                     const std::vector<std::vector<double>>* samples,
                     std::uint64_t seed, int resamples) {
  if (ns.size() < 4) throw ConfigError("N_schedule", "at least 4 points required");
  if (means.size() != ns.size() || std_errors.size() != ns.size()) {
    throw ConfigError("means", "length must match N schedule");
  }
  for (double m : means) {
    if (!(m > 0.0)) throw DomainError("rate fit needs positive means");
  }
  RateEstimate est;
  est.ns = ns;
  est.means = means;
  est.std_errors = std_errors;
  std::vector<double> x(ns.size()), y(ns.size());
  for (size_t i = 0; i < ns.size(); ++i) {
    x[i] = std::log(static_cast<double>(ns[i]));
    y[i] = std::log(means[i]);
  }
  est.slope = OlsSlope(x, y, &est.intercept, &est.r2);

  RandomStream rng(seed, "bootstrap", static_cast<std::int64_t>(ns.size()), 0);
  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<double> yb(ns.size());
  for (int b = 0; b < resamples; ++b) {
    bool ok = true;
    for (size_t i = 0; i < ns.size(); ++i) {
      double m = 0.0;
      if (samples && !(*samples)[i].empty()) {
        const auto& s = (*samples)[i];
        for (size_t r = 0; r < s.size(); ++r) {
          m += s[rng.engine()() % s.size()];
        }
        m /= static_cast<double>(s.size());
      } else {
        m = means[i] + std_errors[i] * rng.Normal();
      }
      if (!(m > 0.0)) ok = false;
      yb[i] = ok ? std::log(m) : 0.0;
    }
    if (ok) slopes.push_back(OlsSlope(x, yb));
  }
  if (slopes.empty()) {
    est.ci_low = est.ci_high = est.slope;
  } else {
    std::sort(slopes.begin(), slopes.end());
    const size_t k = slopes.size();
    est.ci_low = slopes[static_cast<size_t>(0.025 * (k - 1))];
    est.ci_high = slopes[static_cast<size_t>(std::ceil(0.975 * (k - 1)))];
  }
  est.ci_low = std::min(est.ci_low, est.slope);
  est.ci_high = std::max(est.ci_high, est.slope);
  return est;
}

void ParallelFor(int count, int workers, const std::function<void(int)>& body) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int threads = std::min(workers, count);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

VarianceCheck ValidateNPlayerVariance(const ExperimentConfig& config, int n,
                                      int replications, double t) {
  ExperimentConfig c = config;
  c.method = Method::kExact;
  const TimeGrid exact = CoarsestGrid(c.params.T, c.riccati_steps, {t});
  const PathSetup setup(c, n, exact);
  const int node = exact.IndexOf(t);
  std::vector<double> x(replications);
  ParallelFor(replications, c.workers, [&](int r) {
    x[r] = setup.Simulate(c, n, r).State(node, 0);
  });
  const Moments m = MeanSe(x);
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = (v - m.mean) * (v - m.mean);
    m2 += d;
    m4 += d * d;
  }
  const double r = replications;
  m2 /= r;
  m4 /= r;
  VarianceCheck out;
  out.sample = m2 * r / (r - 1);
  out.std_error = std::sqrt(std::max(m4 - m2 * m2, 0.0) / r);
  const int f = node * setup.stride();
  const double s0 = c.params.initial_law.Variance();
  const double e = setup.kernels.e2a_hat[f];
  out.formula = (1.0 - 1.0 / n) * (s0 + setup.kernels.sigma2_hat[f]) / (e * e) +
                (s0 + t) / n + t;
  return out;
}

ExperimentResult RunQ1(const ExperimentConfig& config) {
  config.Validate();
  RequirePlayers(config, 2);
  ExperimentResult res;
  res.experiment = "q1";
  const ModelParams& base = config.params;
  const TimeGrid grid(base.T, config.riccati_steps);
  const double m0 = base.initial_law.Mean(), s0 = base.initial_law.Variance();

  if (base.initial_law.is_gaussian()) {
    for (double t : config.Checkpoints()) {
      const int node = grid.IndexOf(t);
      for (double p : config.p_list) {
        std::vector<double> values;
        for (int n : config.n_schedule) {
          const OuKernel k = BuildKernels(SolveRiccati(WithN(base, n), grid));
          const double var_mfg = ConditionalVariance(k, node, s0) + t;
          const double e = k.e2a_hat[node];
          const double var_n =
              (1.0 - 1.0 / n) * (s0 + k.sigma2_hat[node]) / (e * e) +
              (s0 + t) / n + t;
          const double w =
              WpGaussian(m0, std::sqrt(var_mfg), m0, std::sqrt(var_n), p);
          values.push_back(w);
          res.raw.push_back({"q1", p, t, n, 0, w});
        }
        RateEstimate est =
            FitRate(config.n_schedule, values,
                    std::vector<double>(values.size(), 0.0), nullptr,
                    config.seed, config.bootstrap_resamples);
        est.label = "q1 closed-form W_p" + Fmt(" p=%g", p) + Fmt(" t=%g", t);
        est.p = p;
        est.t = t;
        res.estimates.push_back(est);
      }
    }
    return res;
  }

  if (config.replications < 10000) {
    throw ConfigError("replications",
                      "non-gaussian initial law needs the Monte Carlo mode "
                      "with R>=10000");
  }
  const auto times = config.Checkpoints();
  const TimeGrid exact = CoarsestGrid(base.T, config.riccati_steps, times);
  for (size_t c = 0; c < times.size(); ++c) {
    const double t = times[c];
    for (double p : config.p_list) {
      std::vector<double> values;
      for (int n : config.n_schedule) {
        const PathSetup setup(config, n, exact);
        const int node = setup.sim.IndexOf(t);
        const int f = node * setup.stride();
        std::vector<double> xn(config.replications), xm(config.replications);
        ParallelFor(config.replications, config.workers, [&](int r) {
          const PathEnsemble e = setup.Simulate(config, n, r);
          xn[r] = e.State(node, 0);
          RandomStream rng(config.seed, "q1-mfg", n, r);
          xm[r] = ExactSampleMfg(setup.params, setup.kernels, f, e.common[node],
                                 1, rng)[0];
        });
        const double w = WpEmpirical(EmpiricalMeasure1D(xn),
                                     EmpiricalMeasure1D(xm), p);
        values.push_back(w);
        res.raw.push_back({"q1", p, t, n, 0, w});
      }
      RateEstimate est =
          FitRate(config.n_schedule, values,
                  std::vector<double>(values.size(), 0.0), nullptr,
                  config.seed, config.bootstrap_resamples);
      est.label = "q1 monte-carlo W_p" + Fmt(" p=%g", p) + Fmt(" t=%g", t);
      est.p = p;
      est.t = t;
      res.estimates.push_back(est);
    }
  }
  return res;
}

ExperimentResult RunQ2(const ExperimentConfig& config) {
  config.Validate();
  RequireReferenceSize(config);
  ExperimentResult res;
  res.experiment = "q2";
  const auto times = config.Checkpoints();
  const size_t np = config.p_list.size(), nt = times.size();
  const TimeGrid exact =
      CoarsestGrid(config.params.T, config.riccati_steps, times);
  // values[(c * np + q)][n_index][rep]
  std::vector<std::vector<std::vector<double>>> values(
      nt * np, std::vector<std::vector<double>>(config.n_schedule.size()));

  for (size_t ni = 0; ni < config.n_schedule.size(); ++ni) {
    const int n = config.n_schedule[ni];
    const int R = config.replications;
    for (auto& v : values) v[ni].assign(R, 0.0);

    if (n == 1) {
      // Degenerate case: a single exact mean-field draw.
      const TimeGrid grid(config.params.T, config.riccati_steps);
      const OuKernel k = BuildKernels(SolveRiccati(config.params, grid));
      std::vector<int> nodes;
      for (double t : times) nodes.push_back(grid.IndexOf(t));
      const LawSource laws(config, config.params, k, nodes, n);
      ParallelFor(R, config.workers, [&](int r) {
        RandomStream rng(config.seed, "path", n, r);
        for (size_t c = 0; c < nt; ++c) {
          const double shift = std::sqrt(times[c]) * rng.Normal();
          const auto atom = ExactSampleMfg(config.params, k, nodes[c], shift, 1,
                                           rng);
          for (size_t q = 0; q < np; ++q) {
            values[c * np + q][ni][r] = WpPowEmpiricalVsLaw(
                atom, laws.At(c, shift), config.p_list[q]);
          }
        }
      });
      continue;
    }

    const PathSetup setup(config, n, exact);
    std::vector<int> sim_nodes, kernel_nodes;
    for (double t : times) {
      sim_nodes.push_back(setup.sim.IndexOf(t));
      kernel_nodes.push_back(sim_nodes.back() * setup.stride());
    }
    const LawSource laws(config, setup.params, setup.kernels, kernel_nodes, n);
    ParallelFor(R, config.workers, [&](int r) {
      const PathEnsemble e = setup.Simulate(config, n, r);
      for (size_t c = 0; c < nt; ++c) {
        const auto cs = e.CrossSection(sim_nodes[c]);
        const EmpiricalMeasure1D cross({cs.begin(), cs.end()});
        const Law1D law = laws.At(c, e.common[sim_nodes[c]]);
        for (size_t q = 0; q < np; ++q) {
          values[c * np + q][ni][r] =
              WpPowEmpiricalVsLaw(cross, law, config.p_list[q]);
        }
      }
    });
  }

  for (size_t c = 0; c < nt; ++c) {
    for (size_t q = 0; q < np; ++q) {
      const double p = config.p_list[q], t = times[c];
      const auto& v = values[c * np + q];
      for (size_t ni = 0; ni < v.size(); ++ni) {
        for (size_t r = 0; r < v[ni].size(); ++r) {
          res.raw.push_back({"q2", p, t, config.n_schedule[ni],
                             static_cast<int>(r), v[ni][r]});
        }
      }
      res.estimates.push_back(Summarize("q2 E[W_p^p]" + Fmt(" p=%g", p) +
                                            Fmt(" t=%g", t),
                                        p, t, config.n_schedule, v, config,
                                        static_cast<std::int64_t>(c * np + q)));
    }
  }
  return res;
}

ExperimentResult RunQ3(const ExperimentConfig& config) {
  config.Validate();
  RequirePlayers(config, 2);
  RequireReferenceSize(config);
  ExperimentResult res;
  res.experiment = "q3";
  const size_t np = config.p_list.size();
  const double T = config.params.T;
  const TimeGrid exact(T, config.sup_nodes);
  std::vector<std::vector<std::vector<double>>> values(
      np, std::vector<std::vector<double>>(config.n_schedule.size()));

  for (size_t ni = 0; ni < config.n_schedule.size(); ++ni) {
    const int n = config.n_schedule[ni];
    const PathSetup setup(config, n, exact);
    const int sim_per_sup = GridStride(setup.sim, exact);
    std::vector<int> sim_nodes, kernel_nodes;
    for (int s = 1; s <= config.sup_nodes; ++s) {
      sim_nodes.push_back(s * sim_per_sup);
      kernel_nodes.push_back(sim_nodes.back() * setup.stride());
    }
    const LawSource laws(config, setup.params, setup.kernels, kernel_nodes, n);
    for (auto& v : values) v[ni].assign(config.replications, 0.0);
    ParallelFor(config.replications, config.workers, [&](int r) {
      const PathEnsemble e = setup.Simulate(config, n, r);
      std::vector<double> sup(np, 0.0);
      for (size_t c = 0; c < sim_nodes.size(); ++c) {
        const auto cs = e.CrossSection(sim_nodes[c]);
        const EmpiricalMeasure1D cross({cs.begin(), cs.end()});
        const Law1D law = laws.At(c, e.common[sim_nodes[c]]);
        for (size_t q = 0; q < np; ++q) {
          sup[q] = std::max(sup[q],
                            WpPowEmpiricalVsLaw(cross, law, config.p_list[q]));
        }
      }
      for (size_t q = 0; q < np; ++q) values[q][ni][r] = sup[q];
    });
  }
  for (size_t q = 0; q < np; ++q) {
    const double p = config.p_list[q];
    for (size_t ni = 0; ni < config.n_schedule.size(); ++ni) {
      for (int r = 0; r < config.replications; ++r) {
        res.raw.push_back({"q3", p, T, config.n_schedule[ni], r,
                           values[q][ni][r]});
      }
    }
    res.estimates.push_back(Summarize(
        "q3 E[max_t W_p^p]" + Fmt(" p=%g", p) +
            Fmt(" nodes=%g", config.sup_nodes),
        p, T, config.n_schedule, values[q], config, static_cast<std::int64_t>(q)));
  }
  return res;
}

ExperimentResult RunIidBaseline(const ExperimentConfig& config) {
  config.Validate();
  ExperimentResult res;
  res.experiment = "iid";
  const size_t np = config.p_list.size(), nn = config.n_schedule.size();
  const int R = config.replications;
  constexpr int kDirections = 16;
  std::vector<std::vector<std::vector<double>>> values(
      np + 1, std::vector<std::vector<double>>(nn, std::vector<double>(R)));
  const Law1D standard = Law1D::Gaussian(0.0, 1.0);
  for (size_t ni = 0; ni < nn; ++ni) {
    const int n = config.n_schedule[ni];
    ParallelFor(R, config.workers, [&](int r) {
      RandomStream rng(config.seed, "iid", n, r);
      std::vector<double> x(n), y(n);
      for (double& v : x) v = rng.Normal();
      const EmpiricalMeasure1D m(x);
      for (size_t q = 0; q < np; ++q) {
        values[q][ni][r] = WpPowEmpiricalVsLaw(m, standard, config.p_list[q]);
      }
      // d = 2: every unit projection of N(0, I) is N(0, 1) and 1-Lipschitz,
      // so the max over directions bounds the planar W_1 from below.
      for (double& v : y) v = rng.Normal();
      double best = 0.0;
      for (int d = 0; d < kDirections; ++d) {
        const double th = std::numbers::pi * d / kDirections;
        std::vector<double> proj(n);
        for (int i = 0; i < n; ++i) {
          proj[i] = std::cos(th) * x[i] + std::sin(th) * y[i];
        }
        best = std::max(best, WpPowEmpiricalVsLaw(EmpiricalMeasure1D(proj),
                                                  standard, 1.0));
      }
      values[np][ni][r] = best;
    });
  }
  for (size_t q = 0; q <= np; ++q) {
    const bool planar = q == np;
    const double p = planar ? 1.0 : config.p_list[q];
    const std::string name = planar ? "iid-d2" : "iid";
    for (size_t ni = 0; ni < nn; ++ni) {
      for (int r = 0; r < R; ++r) {
        res.raw.push_back({name, p, 0.0, config.n_schedule[ni], r,
                           values[q][ni][r]});
      }
    }
    res.estimates.push_back(Summarize(
        planar ? std::string("iid d=2 projected E[W_1]")
               : "iid d=1 E[W_p^p]" + Fmt(" p=%g", p),
        p, 0.0, config.n_schedule, values[q], config,
        static_cast<std::int64_t>(q)));
  }
  return res;
}

ExperimentResult RunCommonNoiseSequence(const ExperimentConfig& config) {
  config.Validate();
  ExperimentResult res;
  res.experiment = "common-noise";
  constexpr double kRho = 0.5, kSigma = 0.5;
  constexpr int kSigmaGrid = 11;
  const size_t np = config.p_list.size(), nn = config.n_schedule.size();
  const int R = config.replications;
  auto target_var = [](double s) { return 1.0 + s * s + 2.0 * kRho * s; };
  std::vector<std::vector<std::vector<double>>> values(
      np + 1, std::vector<std::vector<double>>(nn, std::vector<double>(R)));
  std::vector<double> gaps(nn * R, 0.0);
  for (size_t ni = 0; ni < nn; ++ni) {
    const int n = config.n_schedule[ni];
    ParallelFor(R, config.workers, [&](int r) {
      RandomStream rng(config.seed, "common-noise", n, r);
      const double beta = rng.Normal();
      std::vector<double> g(n), a(n);
      for (int i = 0; i < n; ++i) {
        g[i] = rng.Normal();
        a[i] = kRho * g[i] + std::sqrt(1 - kRho * kRho) * rng.Normal();
      }
      auto sample = [&](double s) {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = g[i] + s * a[i] + beta;
        return EmpiricalMeasure1D(std::move(x));
      };
      const EmpiricalMeasure1D x = sample(kSigma);
      const double v = target_var(kSigma);
      for (size_t q = 0; q < np; ++q) {
        const double p = config.p_list[q];
        const double w = WpPowEmpiricalVsLaw(x, Law1D::Gaussian(beta, v), p);
        const double reduced = WpPowEmpiricalVsLaw(
            x.Shifted(-beta), Law1D::Gaussian(0.0, v), p);
        values[q][ni][r] = w;
        gaps[ni * R + r] = std::max(gaps[ni * R + r], std::abs(w - reduced));
      }
      double sup = 0.0;
      for (int k = 0; k < kSigmaGrid; ++k) {
        const double s = static_cast<double>(k) / (kSigmaGrid - 1);
        sup = std::max(sup, WpPowEmpiricalVsLaw(
                                sample(s), Law1D::Gaussian(beta, target_var(s)),
                                1.0));
      }
      values[np][ni][r] = sup;
    });
  }
  for (size_t q = 0; q <= np; ++q) {
    const bool uniform = q == np;
    const double p = uniform ? 1.0 : config.p_list[q];
    const std::string name = uniform ? "common-noise-sup" : "common-noise";
    for (size_t ni = 0; ni < nn; ++ni) {
      for (int r = 0; r < R; ++r) {
        res.raw.push_back({name, p, 0.0, config.n_schedule[ni], r,
                           values[q][ni][r]});
      }
    }
    res.estimates.push_back(Summarize(
        uniform ? std::string("common-noise sup over sigma E[W_1]")
                : "common-noise E[W_p^p]" + Fmt(" p=%g", p),
        p, 0.0, config.n_schedule, values[q], config,
        static_cast<std::int64_t>(q)));
  }
  res.diagnostics.emplace_back("max_translation_gap",
                               *std::max_element(gaps.begin(), gaps.end()));
  return res;
}

ExperimentResult RunDeltaScaling(const ExperimentConfig& config) {
  config.Validate();
  RequirePlayers(config, 2);
  ExperimentResult res;
  res.experiment = "delta";
  const double T = config.params.T;
  const size_t nn = config.n_schedule.size();
  const int R = config.replications;
  // Terms: delta, I, II, III, IV.
  std::vector<std::vector<std::vector<double>>> values(
      5, std::vector<std::vector<double>>(nn, std::vector<double>(R)));
  ExperimentConfig exact_config = config;
  exact_config.method = Method::kExact;
  for (size_t ni = 0; ni < nn; ++ni) {
    const int n = config.n_schedule[ni];
    const PathSetup setup(exact_config, n, TimeGrid(T, config.sup_nodes));
    ParallelFor(R, config.workers, [&](int r) {
      const NoiseBundle noise = GenerateNoise(
          setup.sim, &*setup.model, setup.params.initial_law, n,
          StreamId{config.seed, "delta", n, r});
      const DeltaSups s =
          SupSquares(ComputeDelta(setup.params, setup.kernels, noise), 0);
      values[0][ni][r] = s.delta;
      values[1][ni][r] = s.i;
      values[2][ni][r] = s.ii;
      values[3][ni][r] = s.iii;
      values[4][ni][r] = s.iv;
    });
  }
  const char* names[] = {"delta", "I", "II", "III", "IV"};
  for (int term = 0; term < 5; ++term) {
    for (size_t ni = 0; ni < nn; ++ni) {
      for (int r = 0; r < R; ++r) {
        res.raw.push_back({std::string("delta-") + names[term], 2.0, T,
                           config.n_schedule[ni], r, values[term][ni][r]});
      }
    }
    res.estimates.push_back(Summarize(
        std::string("E[sup_t ") + names[term] + "^2]", 2.0, T,
        config.n_schedule, values[term], config, term));
  }
  return res;
}

double EvaluateNPlayerCost(const PathEnsemble& ensemble,
                           std::span<const double> controls,
                           const ModelParams& params, int player) {
  const int n = ensemble.players, steps = ensemble.grid.steps();
  if (controls.size() != ensemble.states.size()) {
    throw ConfigError("controls", "must align with the state grid");
  }
  double total = 0.0;
  for (int m = 0; m <= steps; ++m) {
    const auto x = ensemble.CrossSection(m);
    double s1 = 0.0, s2 = 0.0;
    for (double v : x) {
      s1 += v;
      s2 += v * v;
    }
    const double xi = x[player];
    const double u = controls[static_cast<size_t>(m) * n + player];
    const double f = params.k / n * (n * xi * xi - 2.0 * xi * s1 + s2);
    const double w = (m == 0 || m == steps) ? 0.5 : 1.0;
    total += w * (0.5 * u * u + f);
  }
  return total * ensemble.grid.dt();
}

std::string NashStatusName(NashStatus s) {
  switch (s) {
    case NashStatus::kPass: return "pass";
    case NashStatus::kFail: return "fail";
    case NashStatus::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

void NashConfig::Validate() const {
  params.Validate();
  const int n = params.RequireN();
  if (n > 8) throw ConfigError("N", "N<=8 required for the deviation check");
  if (std::find(epsilons.begin(), epsilons.end(), 0.0) == epsilons.end()) {
    throw ConfigError("epsilons", "schedule must contain 0");
  }
  std::vector<double> e = epsilons;
  std::sort(e.begin(), e.end());
  if (std::unique(e.begin(), e.end()) - e.begin() < 3) {
    throw ConfigError("epsilons", "at least 3 distinct values required");
  }
  if (replications < min_replications) {
    throw ConfigError("replications",
                      "R below configured minimum " +
                          std::to_string(min_replications));
  }
  if (steps < 2) throw ConfigError("steps", "steps>=2 required");
}

CostReport NashDeviationCheck(const NashConfig& config) {
  config.Validate();
  const ModelParams& params = config.params;
  const int n = params.RequireN();
  const TimeGrid grid(params.T, config.steps);
  const RiccatiTable table = SolveRiccati(params, grid);
  const int ne = static_cast<int>(config.epsilons.size());
  const int R = config.replications;

  Eigen::MatrixXd design(ne, 3);
  for (int e = 0; e < ne; ++e) {
    const double x = config.epsilons[e];
    design(e, 0) = 1.0;
    design(e, 1) = x;
    design(e, 2) = x * x;
  }
  const Eigen::MatrixXd fit =
      (design.transpose() * design).ldlt().solve(design.transpose());

  std::vector<double> costs(static_cast<size_t>(R) * ne);
  ParallelFor(R, config.workers, [&](int r) {
    const NoiseBundle noise =
        GenerateNoise(grid, nullptr, params.initial_law, n,
                      StreamId{config.seed, "nash", n, r});
    PathEnsemble e;
    e.grid = grid;
    e.players = n;
    e.method = Method::kEuler;
    e.states.resize(static_cast<size_t>(grid.size()) * n);
    e.controls.resize(e.states.size());
    for (int k = 0; k < ne; ++k) {
      const double scale = 1.0 + config.epsilons[k];
      std::copy(noise.initials.begin(), noise.initials.end(), e.states.begin());
      for (int m = 0; m <= grid.steps(); ++m) {
        double* x = e.states.data() + static_cast<size_t>(m) * n;
        double* u = e.controls.data() + static_cast<size_t>(m) * n;
        double xbar = 0.0;
        for (int i = 0; i < n; ++i) xbar += x[i];
        xbar /= n;
        for (int i = 0; i < n; ++i) u[i] = -2.0 * table.aHatN[m] * (x[i] - xbar);
        u[0] *= scale;
        if (m == grid.steps()) break;
        const double* dw = noise.idio.data() + static_cast<size_t>(m) * n;
        for (int i = 0; i < n; ++i) {
          x[n + i] = x[i] + u[i] * grid.dt() + dw[i] + noise.common[m];
        }
      }
      costs[static_cast<size_t>(r) * ne + k] =
          EvaluateNPlayerCost(e, e.controls, params, 0);
    }
  });

  CostReport rep;
  rep.epsilons = config.epsilons;
  rep.replications = R;
  rep.steps = config.steps;
  std::vector<double> column(R);
  for (int k = 0; k < ne; ++k) {
    for (int r = 0; r < R; ++r) column[r] = costs[static_cast<size_t>(r) * ne + k];
    const Moments m = MeanSe(column);
    rep.cost.push_back(m.mean);
    rep.cost_se.push_back(m.se);
  }
  std::vector<double> c0(R), c1(R), c2(R);
  for (int r = 0; r < R; ++r) {
    const Eigen::Map<const Eigen::VectorXd> j(costs.data() +
                                              static_cast<size_t>(r) * ne, ne);
    const Eigen::Vector3d c = fit * j;
    c0[r] = c(0);
    c1[r] = c(1);
    c2[r] = c(2);
  }
  const Moments m0 = MeanSe(c0), m1 = MeanSe(c1), m2 = MeanSe(c2);
  rep.c0 = m0.mean;
  rep.c1 = m1.mean;
  rep.c2 = m2.mean;
  rep.c0_se = m0.se;
  rep.c1_se = m1.se;
  rep.c2_se = m2.se;

  // J(eps) - J(-eps) at the largest |eps| with both signs present.
  double best = 0.0;
  int plus = -1, minus = -1;
  for (int a = 0; a < ne; ++a) {
    for (int b = 0; b < ne; ++b) {
      const double ea = config.epsilons[a];
      if (ea > best && config.epsilons[b] == -ea) {
        best = ea;
        plus = a;
        minus = b;
      }
    }
  }
  if (plus >= 0) {
    for (int r = 0; r < R; ++r) {
      column[r] = costs[static_cast<size_t>(r) * ne + plus] -
                  costs[static_cast<size_t>(r) * ne + minus];
    }
    const Moments d = MeanSe(column);
    rep.antisymmetric = d.mean;
    rep.antisymmetric_se = d.se;
  }

  const bool convex = rep.c2 - 1.96 * rep.c2_se > 0.0;
  const bool concave = rep.c2 + 1.96 * rep.c2_se < 0.0;
  const bool flat = std::abs(rep.c1) <= 3.0 * rep.c1_se;
  if (convex && flat) {
    rep.status = NashStatus::kPass;
  } else if (!convex && !concave) {
    rep.status = NashStatus::kInconclusive;
  } else {
    rep.status = NashStatus::kFail;
  }
  return rep;
}

void WriteRawCsv(const std::vector<RawRecord>& raw, std::ostream& out) {
  out << "experiment,p,t,N,replication,value\n";
  char buf[256];
  for (const auto& r : raw) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%d,%d,%.17g\n",
                  r.experiment.c_str(), r.p, r.t, r.n, r.replication, r.value);
    out << buf;
  }
}

}  // namespace lqgmfg
