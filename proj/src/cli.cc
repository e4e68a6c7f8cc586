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


#include "lqgmfg/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "lqgmfg/errors.h"
#include "lqgmfg/matrix_riccati.h"
#include "lqgmfg/riccati.h"

namespace lqgmfg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- typed access with field names -------------------------------------

void RejectUnknown(const json& obj, const std::string& prefix,
                   const std::set<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError(prefix + it.key(), "unknown field");
    }
  }
}

const json* Find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double Number(const json& obj, const std::string& key, const std::string& field,
              double fallback) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(field, "number expected");
  return v->get<double>();
}

int Integer(const json& obj, const std::string& key, const std::string& field,
            int fallback) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(field, "integer expected");
  const auto x = v->get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() ||
      x > std::numeric_limits<int>::max()) {
    throw ConfigError(field, "integer out of range");
  }
  return static_cast<int>(x);
}

std::string String(const json& obj, const std::string& key,
                   const std::string& field, const std::string& fallback) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(field, "string expected");
  return v->get<std::string>();
}

template <typename T>
std::vector<T> List(const json& obj, const std::string& key,
                    const std::string& field, std::vector<T> fallback) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_array()) throw ConfigError(field, "array expected");
  std::vector<T> out;
  for (const auto& e : *v) {
    if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer()) throw ConfigError(field, "integers expected");
    } else {
      if (!e.is_number()) throw ConfigError(field, "numbers expected");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

const json& Object(const json& obj, const std::string& key,
                   const std::string& field) {
  static const json kEmpty = json::object();
  const json* v = Find(obj, key);
  if (!v) return kEmpty;
  if (!v->is_object()) throw ConfigError(field, "object expected");
  return *v;
}

InitialLaw ParseLaw(const json& obj) {
  const std::string type = String(obj, "type", "initial_law.type", "gaussian");
  auto f = [](const char* k) { return std::string("initial_law.") + k; };
  if (type == "gaussian") {
    RejectUnknown(obj, "initial_law.", {"type", "mean", "var"});
    return InitialLaw(GaussianLaw{Number(obj, "mean", f("mean"), 0.0),
                                  Number(obj, "var", f("var"), 1.0)});
  }
  if (type == "two_point") {
    RejectUnknown(obj, "initial_law.", {"type", "x_lo", "x_hi", "prob_hi"});
    return InitialLaw(TwoPointLaw{Number(obj, "x_lo", f("x_lo"), -1.0),
                                  Number(obj, "x_hi", f("x_hi"), 1.0),
                                  Number(obj, "prob_hi", f("prob_hi"), 0.5)});
  }
  if (type == "shifted_exponential") {
    RejectUnknown(obj, "initial_law.", {"type", "rate", "shift"});
    return InitialLaw(
        ShiftedExponentialLaw{Number(obj, "rate", f("rate"), 1.0),
                              Number(obj, "shift", f("shift"), 0.0)});
  }
  throw ConfigError("initial_law.type",
                    "one of gaussian, two_point, shifted_exponential required");
}

json LawJson(const InitialLaw& law) {
  return std::visit(
      [](const auto& l) -> json {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, GaussianLaw>) {
          return {{"type", "gaussian"}, {"mean", l.mean}, {"var", l.var}};
        } else if constexpr (std::is_same_v<L, TwoPointLaw>) {
          return {{"type", "two_point"},
                  {"x_lo", l.x_lo},
                  {"x_hi", l.x_hi},
                  {"prob_hi", l.prob_hi}};
        } else {
          return {{"type", "shifted_exponential"},
                  {"rate", l.rate},
                  {"shift", l.shift}};
        }
      },
      law.variant());
}

// ---- output helpers -----------------------------------------------------

std::string Timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string Dump(const json& j) { return j.dump(2) + "\n"; }

json EstimateJson(const RateEstimate& e) {
  return {{"label", e.label},
          {"p", e.p},
          {"t", e.t},
          {"N", e.ns},
          {"mean", e.means},
          {"std_error", e.std_errors},
          {"slope", e.slope},
          {"intercept", e.intercept},
          {"r2", e.r2},
          {"ci", {e.ci_low, e.ci_high}}};
}

// Collects outputs, verdicts and timing for manifest.json.
class Manifest {
 public:
  Manifest(const RunConfig& config, std::string command)
      : config_(config),
        command_(std::move(command)),
        start_(std::chrono::system_clock::now()),
        clock_(std::chrono::steady_clock::now()) {}

  void AddOutput(const fs::path& p) { outputs_.push_back(p.string()); }
  void AddVerdict(const std::string& name, const std::string& v) {
    verdicts_[name] = v;
  }

  void Write(const fs::path& dir, int exit_code) const {
    const auto end = std::chrono::system_clock::now();
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_)
            .count();
    json m = {{"schema_version", kManifestSchemaVersion},
              {"tool", "lqgmfg"},
              {"tool_version", kToolVersion},
              {"command", command_},
              {"config", config_.Echo()},
              {"master_seed", config_.seed},
              {"workers", config_.workers},
              {"started_at", Timestamp(start_)},
              {"finished_at", Timestamp(end)},
              {"wall_seconds", wall},
              {"outputs", outputs_},
              {"verdicts", verdicts_},
              {"exit_code", exit_code}};
    WriteText(dir / "manifest.json", Dump(m));
  }

 private:
  const RunConfig& config_;
  std::string command_;
  std::chrono::system_clock::time_point start_;
  std::chrono::steady_clock::time_point clock_;
  std::vector<std::string> outputs_;
  std::map<std::string, std::string> verdicts_;
};

int Combine(int a, int b) {
  if (a == kExitFail || b == kExitFail) return kExitFail;
  if (a == kExitInconclusive || b == kExitInconclusive) return kExitInconclusive;
  return kExitPass;
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string Sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

Verdict JudgeSlope(const RateEstimate& est, const SlopeBand& band) {
  if (est.slope >= band.min && est.slope <= band.max) return Verdict::kPass;
  if (est.ci_high >= band.min && est.ci_low <= band.max) {
    return Verdict::kInconclusive;
  }
  return Verdict::kFail;
}

json RunConfig::Echo() const {
  json bands_json = json::array();
  for (const auto& b : bands) {
    json j = {{"p", b.p}, {"match", b.match}};
    if (std::isfinite(b.min)) j["min"] = b.min;
    if (std::isfinite(b.max)) j["max"] = b.max;
    bands_json.push_back(j);
  }
  json out = {
      {"seed", seed},
      {"k", params.k},
      {"T", params.T},
      {"initial_law", LawJson(params.initial_law)},
      {"riccati_steps", riccati_steps},
      {"rates",
       {{"N_schedule", rates.n_schedule},
        {"replications", rates.replications},
        {"checkpoints", rates.Checkpoints()},
        {"p", rates.p_list},
        {"method", MethodName(rates.method)},
        {"sup_nodes", rates.sup_nodes},
        {"reference_factor", rates.reference_factor},
        {"reference_floor", rates.reference_floor},
        {"bootstrap_resamples", rates.bootstrap_resamples},
        {"variance_check_replications", variance_check_replications},
        {"slope_bands", bands_json}}},
      {"nash",
       {{"epsilons", nash.epsilons},
        {"replications", nash.replications},
        {"min_replications", nash.min_replications},
        {"steps", nash.steps}}}};
  if (params.N) out["N"] = *params.N;
  if (nash.params.N) out["nash"]["N"] = *nash.params.N;
  return out;
}

RunConfig ParseConfig(const std::string& text, const std::string& source) {
  RunConfig c;
  c.source = source;
  c.text = text;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to line number.
    const size_t upto = std::min<size_t>(e.byte, text.size());
    const int line =
        1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ConfigError("<syntax>", "line " + std::to_string(line) +
                                      ": malformed JSON");
  }
  if (!root.is_object()) throw ConfigError("<root>", "object expected");
  RejectUnknown(root, "", {"seed", "k", "T", "N", "initial_law",
                           "riccati_steps", "workers", "rates", "nash"});

  const json* seed = Find(root, "seed");
  if (!seed) throw ConfigError("seed", "master seed is required");
  if (!seed->is_number_unsigned()) {
    throw ConfigError("seed", "non-negative integer required");
  }
  c.seed = seed->get<std::uint64_t>();
  c.params.k = Number(root, "k", "k", 1.0);
  c.params.T = Number(root, "T", "T", 1.0);
  if (Find(root, "N")) c.params.N = Integer(root, "N", "N", 2);
  c.params.initial_law =
      ParseLaw(Object(root, "initial_law", "initial_law"));
  c.riccati_steps = Integer(root, "riccati_steps", "riccati_steps", 1024);
  c.workers = Integer(root, "workers", "workers", 1);
  if (c.workers < 1) throw ConfigError("workers", "workers>=1 required");

  const json& r = Object(root, "rates", "rates");
  RejectUnknown(r, "rates.",
                {"N_schedule", "replications", "checkpoints", "p", "method",
                 "sup_nodes", "reference_factor", "reference_floor",
                 "bootstrap_resamples", "variance_check_replications",
                 "slope_bands"});
  ExperimentConfig& e = c.rates;
  e.params = c.params;
  e.params.N.reset();
  e.seed = c.seed;
  e.workers = c.workers;
  e.riccati_steps = c.riccati_steps;
  e.n_schedule = List<int>(r, "N_schedule", "rates.N_schedule", e.n_schedule);
  e.replications = Integer(r, "replications", "rates.replications",
                           e.replications);
  e.checkpoints = List<double>(r, "checkpoints", "rates.checkpoints", {});
  e.p_list = List<double>(r, "p", "rates.p", e.p_list);
  const std::string method = String(r, "method", "rates.method", "exact");
  if (method == "exact") {
    e.method = Method::kExact;
  } else if (method == "euler") {
    e.method = Method::kEuler;
  } else {
    throw ConfigError("rates.method", "one of exact, euler required");
  }
  e.sup_nodes = Integer(r, "sup_nodes", "rates.sup_nodes", e.sup_nodes);
  e.reference_factor = Integer(r, "reference_factor", "rates.reference_factor",
                               e.reference_factor);
  e.reference_floor = Integer(r, "reference_floor", "rates.reference_floor",
                              e.reference_floor);
  e.bootstrap_resamples =
      Integer(r, "bootstrap_resamples", "rates.bootstrap_resamples",
              e.bootstrap_resamples);
  c.variance_check_replications =
      Integer(r, "variance_check_replications",
              "rates.variance_check_replications",
              c.variance_check_replications);
  if (c.variance_check_replications < 100) {
    throw ConfigError("rates.variance_check_replications", ">=100 required");
  }
  if (const json* bands = Find(r, "slope_bands")) {
    if (!bands->is_array()) {
      throw ConfigError("rates.slope_bands", "array expected");
    }
    for (const auto& b : *bands) {
      if (!b.is_object()) {
        throw ConfigError("rates.slope_bands", "objects expected");
      }
      RejectUnknown(b, "rates.slope_bands.", {"p", "min", "max", "match"});
      SlopeBand band;
      band.p = Number(b, "p", "rates.slope_bands.p", 1.0);
      band.min = Number(b, "min", "rates.slope_bands.min", band.min);
      band.max = Number(b, "max", "rates.slope_bands.max", band.max);
      band.match = String(b, "match", "rates.slope_bands.match", "");
      if (!(band.min <= band.max)) {
        throw ConfigError("rates.slope_bands.min", "min<=max required");
      }
      c.bands.push_back(band);
    }
  }

  const json& n = Object(root, "nash", "nash");
  RejectUnknown(n, "nash.",
                {"N", "epsilons", "replications", "min_replications", "steps"});
  c.nash.params = c.params;
  if (Find(n, "N")) c.nash.params.N = Integer(n, "N", "nash.N", 2);
  c.nash.epsilons = List<double>(n, "epsilons", "nash.epsilons",
                                 c.nash.epsilons);
  c.nash.replications = Integer(n, "replications", "nash.replications",
                                c.nash.replications);
  c.nash.min_replications = Integer(n, "min_replications",
                                    "nash.min_replications",
                                    c.nash.min_replications);
  c.nash.steps = Integer(n, "steps", "nash.steps", c.nash.steps);
  c.nash.seed = c.seed;
  c.nash.workers = c.workers;
  return c;
}

int LineOfField(const std::string& text, const std::string& dotted_field) {
  size_t pos = 0;
  std::stringstream parts(dotted_field);
  std::string key;
  bool found = false;
  while (std::getline(parts, key, '.')) {
    const std::string quoted = "\"" + key + "\"";
    size_t hit = pos;
    while (true) {
      hit = text.find(quoted, hit);
      if (hit == std::string::npos) break;
      size_t after = hit + quoted.size();
      while (after < text.size() && std::isspace(
                                        static_cast<unsigned char>(text[after]))) {
        ++after;
      }
      if (after < text.size() && text[after] == ':') break;
      hit += quoted.size();
    }
    if (hit == std::string::npos) break;
    pos = hit;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

std::string Diagnose(const RunConfig& config, const ConfigError& error) {
  const int line = LineOfField(config.text, error.field());
  std::string where = config.source;
  if (line > 0) where += ":" + std::to_string(line);
  return where + ": field '" + error.field() + "': " +
         std::string(error.what()).substr(error.field().size() + 2);
}

// ---- commands -------------------------------------------------------------

namespace {

// Validation errors from library calls carry bare field names; qualify them
// with the config section so that diagnostics point at the right key.
template <typename F>
auto InSection(const std::string& section, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::string field = e.field();
    if (field == "N_schedule" || field == "p" || field == "replications" ||
        field == "checkpoints" || field == "sup_nodes" ||
        field == "reference_factor" || field == "bootstrap_resamples" ||
        field == "epsilons" || field == "steps" || field == "N") {
      field = section + "." + field;
    }
    throw ConfigError(field, std::string(e.what()).substr(e.field().size() + 2));
  }
}

struct Check {
  std::string name;
  double value;
  double tol;
  bool pass() const { return value <= tol; }
};

double SupDiff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

}  // namespace

int CmdRiccati(const RunConfig& config, const fs::path& out_dir,
               std::ostream& log) {
  Manifest manifest(config, "riccati");
  config.params.Validate();
  const TimeGrid grid(config.params.T, config.riccati_steps);
  const RiccatiTable table = SolveRiccati(config.params, grid);
  const double k = config.params.k, T = config.params.T;

  std::vector<Check> checks;
  double a_gap = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    a_gap = std::max(a_gap, std::abs(table.a[j] - AClosed(k, T, grid.t(j))));
  }
  checks.push_back({"a_closed_form", a_gap, 1e-12});
  checks.push_back({"terminal_values",
                    std::max({std::abs(table.a.back()), std::abs(table.b.back()),
                              std::abs(table.c.back()),
                              std::abs(table.d.back())}),
                    0.0});
  const MfgResiduals res = MfgSystemResiduals(table, k);
  // Central differences on this grid resolve the ODEs to O(h^2).
  const double res_tol = std::max(1e-6, 50.0 * grid.dt() * grid.dt() *
                                            std::max(1.0, k * k) *
                                            std::max(1.0, T));
  checks.push_back({"mfg_residual_b", res.b, res_tol});
  checks.push_back({"mfg_residual_c", res.c, res_tol});
  checks.push_back({"mfg_residual_d", res.d, res_tol});

  json pattern = nullptr;
  if (config.params.N) {
    const int N = *config.params.N;
    double hat_gap = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
      hat_gap = std::max(hat_gap, std::abs(table.aHatN[j] -
                                           N / (N - 1.0) * table.a1N[j]));
    }
    checks.push_back({"a_hat_identity", hat_gap, 1e-12});
    if (N <= kMaxMatrixRiccatiPlayers) {
      const TimeGrid fine(T, std::max(4096, config.riccati_steps));
      const MatrixRiccatiSolution sol =
          SolveFullMatrixRiccati(N, config.params, fine);
      const RiccatiTable reduced = SolveRiccati(config.params, fine);
      double dev = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0, gap = 0.0;
      for (int i = 0; i < N; ++i) {
        const PatternCoefficients pat = ExtractPattern(sol, i);
        dev = std::max(dev, pat.max_pattern_deviation);
        a1 = std::max(a1, SupDiff(pat.a1, reduced.a1N));
        a2 = std::max(a2, SupDiff(pat.a2, reduced.a2N));
        for (size_t j = 0; j < pat.a1.size(); ++j) {
          a3 = std::max(a3, std::abs(pat.a3[j] + pat.a1[j] / (N - 1)));
        }
        if (N >= 3) gap = std::max(gap, A3EquationGap(pat, N, k));
      }
      checks.push_back({"pattern_max_deviation", dev, 1e-6});
      checks.push_back({"sup_abs_B", SupAbsB(sol), 1e-8});
      checks.push_back({"a3_relation", a3, 1e-6});
      checks.push_back({"a1_vs_closed_form", a1, 1e-6});
      checks.push_back({"a2_vs_reduced", a2, 1e-6});
      if (N >= 3) checks.push_back({"a3_equation_gap", gap, 1e-6});
      pattern = {{"N", N}, {"steps", fine.steps()}};
    } else {
      pattern = {{"N", N},
                 {"skipped", "full matrix system limited to N<=" +
                                 std::to_string(kMaxMatrixRiccatiPlayers)}};
    }
  }

  fs::create_directories(out_dir);
  std::ostringstream csv;
  WriteRiccatiCsv(table, csv);
  WriteText(out_dir / "riccati.csv", csv.str());
  manifest.AddOutput(out_dir / "riccati.csv");

  bool all = true;
  json checks_json = json::array();
  for (const auto& c : checks) {
    all = all && c.pass();
    checks_json.push_back({{"name", c.name},
                           {"value", c.value},
                           {"tolerance", c.tol},
                           {"pass", c.pass()}});
    log << (c.pass() ? "PASS " : "FAIL ") << c.name << " = " << Sci(c.value)
        << " (tol " << Sci(c.tol) << ")\n";
  }
  const json report = {{"config", config.Echo()},
                       {"checks", checks_json},
                       {"matrix_pattern", pattern},
                       {"pass", all}};
  WriteText(out_dir / "riccati_report.json", Dump(report));
  manifest.AddOutput(out_dir / "riccati_report.json");
  manifest.AddVerdict("riccati_checks", all ? "pass" : "fail");
  const int code = all ? kExitPass : kExitFail;
  manifest.Write(out_dir, code);
  return code;
}

int CmdRates(const RunConfig& config, const std::string& experiment,
             const fs::path& out_dir, std::ostream& log) {
  static const std::map<std::string, ExperimentResult (*)(const ExperimentConfig&)>
      kRunners = {{"q1", RunQ1},
                  {"q2", RunQ2},
                  {"q3", RunQ3},
                  {"iid", RunIidBaseline},
                  {"common-noise", RunCommonNoiseSequence},
                  {"delta", RunDeltaScaling}};
  const auto runner = kRunners.find(experiment);
  if (runner == kRunners.end()) {
    throw ConfigError("experiment", "unknown selector '" + experiment +
                                        "' (q1, q2, q3, iid, common-noise, "
                                        "delta)");
  }
  Manifest manifest(config, "rates " + experiment);
  const ExperimentResult result =
      InSection("rates", [&] { return runner->second(config.rates); });

  int code = kExitPass;
  json estimates = json::array();
  for (const auto& est : result.estimates) {
    json e = EstimateJson(est);
    json verdicts = json::array();
    for (const auto& band : config.bands) {
      if (band.p != est.p) continue;
      if (est.label.find(band.match) == std::string::npos) continue;
      const Verdict v = JudgeSlope(est, band);
      json bj = {{"verdict", VerdictName(v)}};
      if (std::isfinite(band.min)) bj["min"] = band.min;
      if (std::isfinite(band.max)) bj["max"] = band.max;
      verdicts.push_back(bj);
      code = Combine(code, v == Verdict::kPass   ? kExitPass
                           : v == Verdict::kFail ? kExitFail
                                                 : kExitInconclusive);
      manifest.AddVerdict(est.label, VerdictName(v));
    }
    e["bands"] = verdicts;
    estimates.push_back(e);
    log << est.label << ": slope " << Fixed(est.slope, 4) << " CI ["
        << Fixed(est.ci_low, 4) << ", " << Fixed(est.ci_high, 4) << "] r2 "
        << Fixed(est.r2, 4) << "\n";
  }
  json diagnostics = json::object();
  for (const auto& [name, value] : result.diagnostics) diagnostics[name] = value;

  if (experiment == "q1" && config.params.initial_law.is_gaussian()) {
    const VarianceCheck v = InSection("rates", [&] {
      return ValidateNPlayerVariance(config.rates, 8,
                                     config.variance_check_replications,
                                     config.rates.Checkpoints().back());
    });
    const bool ok = std::abs(v.sample - v.formula) <= 5.0 * v.std_error;
    diagnostics["variance_check"] = {{"N", 8},
                                     {"formula", v.formula},
                                     {"sample", v.sample},
                                     {"std_error", v.std_error},
                                     {"pass", ok}};
    manifest.AddVerdict("variance_check", ok ? "pass" : "fail");
    if (!ok) code = kExitFail;
  }

  fs::create_directories(out_dir);
  const fs::path raw = out_dir / (experiment + "_raw.csv");
  const fs::path summary = out_dir / (experiment + "_summary.json");
  const fs::path plot = out_dir / (experiment + ".svg");
  std::ostringstream csv;
  WriteRawCsv(result.raw, csv);
  WriteText(raw, csv.str());
  WriteText(summary, Dump({{"experiment", experiment},
                           {"seed", config.seed},
                           {"config", config.Echo()},
                           {"estimates", estimates},
                           {"diagnostics", diagnostics},
                           {"exit_code", code}}));
  WriteText(plot, RenderRatePlot(result.estimates, experiment));
  manifest.AddOutput(raw);
  manifest.AddOutput(summary);
  manifest.AddOutput(plot);
  manifest.Write(out_dir, code);
  return code;
}

int CmdNash(const RunConfig& config, const fs::path& out_dir,
            std::ostream& log) {
  Manifest manifest(config, "nash");
  const CostReport rep =
      InSection("nash", [&] { return NashDeviationCheck(config.nash); });
  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "epsilon,cost,std_error\n";
  char buf[128];
  for (size_t i = 0; i < rep.epsilons.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", rep.epsilons[i],
                  rep.cost[i], rep.cost_se[i]);
    csv << buf;
  }
  const fs::path table = out_dir / "nash.csv";
  const fs::path summary = out_dir / "nash_summary.json";
  WriteText(table, csv.str());
  WriteText(summary,
            Dump({{"seed", config.seed},
                  {"config", config.Echo()},
                  {"N", *config.nash.params.N},
                  {"replications", rep.replications},
                  {"steps", rep.steps},
                  {"epsilons", rep.epsilons},
                  {"cost", rep.cost},
                  {"cost_std_error", rep.cost_se},
                  {"quadratic", {{"c0", rep.c0}, {"c1", rep.c1}, {"c2", rep.c2}}},
                  {"quadratic_std_error",
                   {{"c0", rep.c0_se}, {"c1", rep.c1_se}, {"c2", rep.c2_se}}},
                  {"antisymmetric", rep.antisymmetric},
                  {"antisymmetric_std_error", rep.antisymmetric_se},
                  {"status", NashStatusName(rep.status)}}));
  manifest.AddOutput(table);
  manifest.AddOutput(summary);
  manifest.AddVerdict("nash", NashStatusName(rep.status));
  log << "c2 = " << Sci(rep.c2) << " +- " << Sci(rep.c2_se) << ", c1 = "
      << Sci(rep.c1) << " +- " << Sci(rep.c1_se) << ": "
      << NashStatusName(rep.status) << "\n";
  const int code = rep.status == NashStatus::kPass   ? kExitPass
                   : rep.status == NashStatus::kFail ? kExitFail
                                                     : kExitInconclusive;
  manifest.Write(out_dir, code);
  return code;
}

std::string RenderRatePlot(const std::vector<RateEstimate>& estimates,
                           const std::string& title) {
  constexpr double kW = 720, kH = 480, kLeft = 70, kRight = 260, kTop = 40,
                   kBottom = 50;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto lower = [](const RateEstimate& e, size_t i) {
    const double lo = e.means[i] - 1.96 * e.std_errors[i];
    return lo > 0 ? lo : e.means[i] * 0.5;
  };
  for (const auto& e : estimates) {
    for (size_t i = 0; i < e.ns.size(); ++i) {
      x0 = std::min(x0, std::log10(e.ns[i]));
      x1 = std::max(x1, std::log10(e.ns[i]));
      y0 = std::min(y0, std::log10(lower(e, i)));
      y1 = std::max(y1, std::log10(e.means[i] + 1.96 * e.std_errors[i]));
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  const double xpad = 0.05 * (x1 - x0), ypad = 0.05 * (y1 - y0);
  x0 -= xpad;
  x1 += xpad;
  y0 -= ypad;
  y1 += ypad;
  auto X = [&](double lx) {
    return kLeft + (lx - x0) / (x1 - x0) * (kW - kLeft - kRight);
  };
  auto Y = [&](double ly) {
    return kH - kBottom - (ly - y0) / (y1 - y0) * (kH - kTop - kBottom);
  };
  std::ostringstream s;
  auto num = [](double v) { return Fixed(v, 2); };
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
    << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"14\">"
    << Escape(title) << " (log-log, 95% error bars)</text>\n"
    << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
    << kW - kLeft - kRight << "\" height=\"" << kH - kTop - kBottom
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(std::ceil(x0)); d <= std::floor(x1); ++d) {
    s << "<text x=\"" << num(X(d)) << "\" y=\"" << kH - kBottom + 16
      << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(y0)); d <= std::floor(y1); ++d) {
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(Y(d) + 4)
      << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  }
  s << "<text x=\"" << (kW - kRight + kLeft) / 2 << "\" y=\"" << kH - 12
    << "\" text-anchor=\"middle\">N</text>\n";
  for (size_t k = 0; k < estimates.size(); ++k) {
    const auto& e = estimates[k];
    const char* color = kColors[k % 8];
    for (size_t i = 0; i < e.ns.size(); ++i) {
      const double x = X(std::log10(e.ns[i]));
      s << "<line x1=\"" << num(x) << "\" x2=\"" << num(x) << "\" y1=\""
        << num(Y(std::log10(lower(e, i)))) << "\" y2=\""
        << num(Y(std::log10(e.means[i] + 1.96 * e.std_errors[i])))
        << "\" stroke=\"" << color << "\"/>\n"
        << "<circle cx=\"" << num(x) << "\" cy=\""
        << num(Y(std::log10(e.means[i]))) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    }
    const double la = std::log10(e.ns.front()), lb = std::log10(e.ns.back());
    auto fit = [&](double lx) {
      return (e.intercept + e.slope * lx * std::log(10.0)) / std::log(10.0);
    };
    s << "<line x1=\"" << num(X(la)) << "\" y1=\"" << num(Y(fit(la)))
      << "\" x2=\"" << num(X(lb)) << "\" y2=\"" << num(Y(fit(lb)))
      << "\" stroke=\"" << color << "\" stroke-dasharray=\"4 3\"/>\n";
    const double ly = kTop + 14 + 30 * static_cast<double>(k);
    s << "<text x=\"" << kW - kRight + 10 << "\" y=\"" << ly << "\" fill=\""
      << color << "\">" << Escape(e.label) << "</text>\n"
      << "<text x=\"" << kW - kRight + 10 << "\" y=\"" << ly + 13
      << "\" fill=\"" << color << "\">slope " << Fixed(e.slope, 4) << " ["
      << Fixed(e.ci_low, 4) << ", " << Fixed(e.ci_high, 4) << "]</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

int RunCli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-player versus mean-field LQG game experiments",
               "lqgmfg"};
  app.require_subcommand(1);
  std::string config_path, out_dir, experiment;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--workers", workers, "worker threads");
    sub->add_option("--seed", seed, "override the configured master seed");
  };
  CLI::App* riccati = app.add_subcommand("riccati", "Riccati tables and checks");
  CLI::App* rates = app.add_subcommand("rates", "convergence-rate experiment");
  CLI::App* nash = app.add_subcommand("nash", "unilateral deviation check");
  add_common(riccati);
  add_common(rates);
  add_common(nash);
  rates->add_option("--experiment", experiment,
                    "q1, q2, q3, iid, common-noise or delta")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    err << "error: cannot read config " << config_path << "\n";
    return kExitConfig;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig config;
  config.source = config_path;
  config.text = buf.str();
  try {
    config = ParseConfig(buf.str(), config_path);
    if (seed) {
      config.seed = config.rates.seed = config.nash.seed = *seed;
    }
    if (workers) {
      if (*workers < 1) throw ConfigError("workers", "workers>=1 required");
      config.workers = config.rates.workers = config.nash.workers = *workers;
    }
    if (riccati->parsed()) return CmdRiccati(config, out_dir, out);
    if (rates->parsed()) return CmdRates(config, experiment, out_dir, out);
    return CmdNash(config, out_dir, out);
  } catch (const ConfigError& e) {
    if (e.field() == "experiment") {
      err << "error: " << e.what() << "\n\n" << rates->help();
    } else {
      err << "config error: " << Diagnose(config, e) << "\n";
    }
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }
}

}  // namespace lqgmfg
