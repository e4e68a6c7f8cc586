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
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lqgmfg/errors.h"

namespace lqgmfg {
namespace {

ExperimentConfig SmallConfig() {
  ExperimentConfig c;
  c.n_schedule = {2, 4, 8, 16};
  c.replications = 50;
  c.riccati_steps = 64;
  c.sup_nodes = 4;
  c.p_list = {1.0, 2.0};
  c.seed = 7;
  c.bootstrap_resamples = 200;
  return c;
}

std::string RawText(const ExperimentResult& r) {
  std::ostringstream out;
  WriteRawCsv(r.raw, out);
  return out.str();
}

TEST_CASE("fit_rate on exact power laws") {
  const std::vector<int> ns = {8, 16, 32, 64, 128};
  std::vector<double> m, zero(ns.size(), 0.0);
  for (int n : ns) m.push_back(3.0 / n);
  const RateEstimate e = FitRate(ns, m, zero);
  CHECK(e.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(e.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(e.ci_low <= e.slope);
  CHECK(e.ci_high >= e.slope);
}

TEST_CASE("fit_rate with noise and log factor") {
  const std::vector<int> ns = {8, 16, 32, 64, 128, 256, 512, 1024};
  RandomStream rng(11, "fit-test", 0, 0);
  std::vector<double> noisy, logged, se;
  for (int n : ns) {
    noisy.push_back(std::pow(n, -0.5) * (1.0 + 0.01 * rng.Normal()));
    logged.push_back(std::pow(n, -0.5) * std::log(n));
    se.push_back(0.01 * std::pow(n, -0.5));
  }
  const RateEstimate a = FitRate(ns, noisy, se, nullptr, 3, 500);
  CHECK(a.slope >= -0.55);
  CHECK(a.slope <= -0.45);
  CHECK(a.ci_low < a.ci_high);
  // The log factor flattens the fit: over j = 3..10 with N = 2^j the OLS
  // slope is -1/2 + cov(j, ln j) / (var(j) ln 2).
  double mj = 0, ml = 0, cov = 0, var = 0;
  for (int j = 3; j <= 10; ++j) {
    mj += j / 8.0;
    ml += std::log(j) / 8.0;
  }
  for (int j = 3; j <= 10; ++j) {
    cov += (j - mj) * (std::log(j) - ml);
    var += (j - mj) * (j - mj);
  }
  const RateEstimate b = FitRate(ns, logged, std::vector<double>(ns.size()));
  CHECK(b.slope == doctest::Approx(-0.5 + cov / var / std::log(2.0)));
  CHECK(b.slope > -0.5);
}

TEST_CASE("fit_rate rejects bad input") {
  CHECK_THROWS_AS(FitRate({1, 2, 3}, {1, 1, 1}, {0, 0, 0}), ConfigError);
  CHECK_THROWS_AS(FitRate({1, 2, 3, 4}, {1, 1, 0, 1}, {0, 0, 0, 0}),
                  DomainError);
  CHECK_THROWS_AS(FitRate({1, 2, 3, 4}, {1, 1, 1}, {0, 0, 0, 0}), ConfigError);
}

TEST_CASE("config validation names fields") {
  ExperimentConfig c = SmallConfig();
  c.n_schedule = {2, 4, 8};
  try {
    c.Validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "N_schedule");
  }
  c = SmallConfig();
  c.p_list = {2.5};
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = SmallConfig();
  c.sup_nodes = 5;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = SmallConfig();
  c.checkpoints = {0.3};
  CHECK_THROWS(c.Validate());
}

TEST_CASE("cost of simple configurations") {
  ModelParams p;
  p.k = 1.0;
  p.N = 2;
  PathEnsemble e;
  e.grid = TimeGrid(1.0, 4);
  e.players = 2;
  e.states.assign(10, 1.5);
  std::vector<double> zero(10, 0.0), ones(10, 1.0), twos(10, 2.0);
  CHECK(EvaluateNPlayerCost(e, zero, p, 0) == 0.0);
  for (int m = 0; m < 5; ++m) {
    e.states[2 * m] = 0.0;
    e.states[2 * m + 1] = 2.0;
  }
  CHECK(EvaluateNPlayerCost(e, zero, p, 0) == doctest::Approx(2.0));
  CHECK(EvaluateNPlayerCost(e, zero, p, 1) == doctest::Approx(2.0));
  const double c1 = EvaluateNPlayerCost(e, ones, p, 0) - 2.0;
  const double c2 = EvaluateNPlayerCost(e, twos, p, 0) - 2.0;
  CHECK(c1 == doctest::Approx(0.5));
  CHECK(c2 == doctest::Approx(4.0 * c1));
  CHECK_THROWS_AS(EvaluateNPlayerCost(e, std::vector<double>(3), p, 0),
                  ConfigError);
}

TEST_CASE("parallel for covers every index and rethrows") {
  std::vector<int> hit(100, 0);
  ParallelFor(100, 4, [&](int i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(ParallelFor(10, 3,
                              [](int i) {
                                if (i == 5) throw DomainError("x");
                              }),
                  DomainError);
}

TEST_CASE("q1 closed form decreases with N") {
  ExperimentConfig c = SmallConfig();
  c.n_schedule = {8, 64, 512, 4096, 32768};
  const ExperimentResult r = RunQ1(c);
  REQUIRE(r.estimates.size() == 2);
  for (const auto& e : r.estimates) {
    for (size_t i = 1; i < e.means.size(); ++i) {
      CHECK(e.means[i] < e.means[i - 1]);
    }
    CHECK(e.slope < -0.5);
    CHECK(e.means.back() < 1e-3);
  }
}

TEST_CASE("non-gaussian q1 demands the Monte Carlo budget") {
  ExperimentConfig c = SmallConfig();
  c.params.initial_law = InitialLaw(TwoPointLaw{});
  CHECK_THROWS_AS(RunQ1(c), ConfigError);
}

TEST_CASE("variance formula matches simulation") {
  ExperimentConfig c = SmallConfig();
  c.params.initial_law = InitialLaw(GaussianLaw{0.3, 0.5});
  const VarianceCheck v = ValidateNPlayerVariance(c, 3, 4000, 1.0);
  CHECK(std::abs(v.sample - v.formula) <= 4.0 * v.std_error);
}

TEST_CASE("q2 records and determinism across workers") {
  ExperimentConfig c = SmallConfig();
  c.checkpoints = {0.5, 1.0};
  const ExperimentResult a = RunQ2(c);
  CHECK(a.estimates.size() == 4);
  CHECK(a.raw.size() == 2u * 2u * 4u * 50u);
  c.workers = 3;
  const ExperimentResult b = RunQ2(c);
  CHECK(RawText(a) == RawText(b));
  for (size_t i = 0; i < a.estimates.size(); ++i) {
    CHECK(a.estimates[i].ci_low == b.estimates[i].ci_low);
  }
  for (const auto& rec : a.raw) CHECK(rec.value >= 0.0);
}

TEST_CASE("q3 with one node equals q2 at the horizon") {
  ExperimentConfig c = SmallConfig();
  c.sup_nodes = 1;
  const ExperimentResult q3 = RunQ3(c);
  const ExperimentResult q2 = RunQ2(c);
  REQUIRE(q3.raw.size() == q2.raw.size());
  for (size_t i = 0; i < q3.raw.size(); ++i) {
    CHECK(q3.raw[i].value == q2.raw[i].value);
  }
}

TEST_CASE("q3 is the max of q2 over the same nodes") {
  ExperimentConfig c = SmallConfig();
  const ExperimentResult q3 = RunQ3(c);
  c.checkpoints = {0.25, 0.5, 0.75, 1.0};
  const ExperimentResult q2 = RunQ2(c);
  // q2 raw order: (t, p, N, rep); q3 raw order: (p, N, rep).
  const size_t block = q3.raw.size();
  REQUIRE(q2.raw.size() == 4 * block);
  for (size_t i = 0; i < block; ++i) {
    double best = 0.0;
    for (size_t c2 = 0; c2 < 4; ++c2) {
      best = std::max(best, q2.raw[c2 * block + i].value);
    }
    CHECK(q3.raw[i].value == best);
  }
}

TEST_CASE("q2 with a non-gaussian law uses references") {
  ExperimentConfig c = SmallConfig();
  c.params.initial_law = InitialLaw(TwoPointLaw{});
  c.reference_factor = 300;
  const ExperimentResult r = RunQ2(c);
  CHECK(r.estimates.size() == 2);
  c.reference_factor = 10;
  CHECK_THROWS_AS(RunQ2(c), ConfigError);
}

TEST_CASE("q2 handles a single player") {
  ExperimentConfig c = SmallConfig();
  c.n_schedule = {1, 2, 4, 8};
  const ExperimentResult r = RunQ2(c);
  CHECK(r.estimates.front().means.front() > 0.0);
}

TEST_CASE("euler q2 runs on the Riccati grid") {
  ExperimentConfig c = SmallConfig();
  c.method = Method::kEuler;
  const ExperimentResult r = RunQ2(c);
  CHECK(r.estimates.size() == 2);
}

TEST_CASE("common noise reduction identity and iid limit") {
  ExperimentConfig c = SmallConfig();
  const ExperimentResult r = RunCommonNoiseSequence(c);
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].second == 0.0);
  CHECK(r.estimates.size() == 3);
  const ExperimentResult iid = RunIidBaseline(c);
  CHECK(iid.estimates.size() == 3);
  CHECK(iid.estimates.back().label.find("d=2") != std::string::npos);
}

TEST_CASE("delta scaling components") {
  ExperimentConfig c = SmallConfig();
  c.n_schedule = {4, 8, 16, 32};
  const ExperimentResult r = RunDeltaScaling(c);
  REQUIRE(r.estimates.size() == 5);
  // Total and the N^-1 terms shrink; I and III shrink faster.
  CHECK(r.estimates[0].slope < -0.5);
  CHECK(r.estimates[1].slope < r.estimates[2].slope);
}

TEST_CASE("nash config validation") {
  NashConfig n;
  n.params.N = 3;
  n.replications = 200;
  n.epsilons = {-0.1, 0.1, 0.2};
  CHECK_THROWS_AS(n.Validate(), ConfigError);
  n.epsilons = {-0.1, 0.0, 0.1};
  n.replications = 50;
  CHECK_THROWS_AS(n.Validate(), ConfigError);
  n.replications = 200;
  n.params.N = std::nullopt;
  CHECK_THROWS_AS(n.Validate(), ConfigError);
}

TEST_CASE("nash deviation is convex at zero") {
  NashConfig n;
  n.params.N = 3;
  n.replications = 400;
  n.steps = 128;
  n.seed = 5;
  const CostReport rep = NashDeviationCheck(n);
  CHECK(rep.cost.size() == 5);
  CHECK(rep.c2 > 0.0);
  CHECK(std::abs(rep.c1) <= 4.0 * rep.c1_se + 1e-3);
  CHECK(rep.status != NashStatus::kFail);
  n.workers = 2;
  const CostReport again = NashDeviationCheck(n);
  CHECK(again.c1 == rep.c1);
  CHECK(again.c2 == rep.c2);
}

}  // namespace
}  // namespace lqgmfg
