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


// Command-line front end: JSON configuration, dispatch and persistence.
//
//   lqgmfg riccati --config run.json --out DIR
//   lqgmfg rates   --config run.json --out DIR --experiment q2 [--workers 4]
//   lqgmfg nash    --config run.json --out DIR [--seed 7]
//
// Exit codes: 0 pass, 1 criterion failure, 2 configuration error,
// 3 statistically inconclusive.

#ifndef LQGMFG_CLI_H_
#define LQGMFG_CLI_H_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lqgmfg/errors.h"
#include "lqgmfg/experiments.h"

namespace lqgmfg {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestSchemaVersion = 1;

enum ExitCode : int {
  kExitPass = 0,
  kExitFail = 1,
  kExitConfig = 2,
  kExitInconclusive = 3,
};

// Acceptance band on a fitted slope. Applies to every estimate with this p
// whose label contains `match`.
struct SlopeBand {
  double p = 1.0;
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
  std::string match;
};

enum class Verdict { kPass, kFail, kInconclusive };
std::string VerdictName(Verdict v);

// Point inside the band passes; outside with an overlapping CI is
// inconclusive; otherwise fails.
Verdict JudgeSlope(const RateEstimate& est, const SlopeBand& band);

struct RunConfig {
  std::string source;  // file name used in diagnostics
  std::string text;    // raw config text
  ModelParams params;
  std::uint64_t seed = 0;
  int riccati_steps = 1024;
  int workers = 1;
  ExperimentConfig rates;
  std::vector<SlopeBand> bands;
  int variance_check_replications = 20000;
  NashConfig nash;

  // Effective configuration without scheduling knobs, so that it is
  // identical across worker counts.
  nlohmann::json Echo() const;
};

// Parses and type-checks; unknown keys are rejected. Throws ConfigError.
RunConfig ParseConfig(const std::string& text, const std::string& source);

// "source:line: field 'k': k>0 required". Line is best effort (0 if unknown).
std::string Diagnose(const RunConfig& config, const ConfigError& error);
int LineOfField(const std::string& text, const std::string& dotted_field);

int CmdRiccati(const RunConfig& config, const std::filesystem::path& out_dir,
               std::ostream& log);
int CmdRates(const RunConfig& config, const std::string& experiment,
             const std::filesystem::path& out_dir, std::ostream& log);
int CmdNash(const RunConfig& config, const std::filesystem::path& out_dir,
            std::ostream& log);

// Self-contained log-log plot: points with 95% error bars, fitted lines and
// slope annotations.
std::string RenderRatePlot(const std::vector<RateEstimate>& estimates,
                           const std::string& title);

// Full entry point; never throws.
int RunCli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace lqgmfg

#endif  // LQGMFG_CLI_H_
