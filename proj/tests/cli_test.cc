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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace lqgmfg {
namespace {

namespace fs = std::filesystem;

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lqgmfg_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path WriteConfig(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lqgmfg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code =
      RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kTiny = R"({
  "seed": 11,
  "rates": {
    "N_schedule": [8, 16, 32, 64],
    "replications": 50,
    "bootstrap_resamples": 200
  },
  "nash": {"N": 2, "replications": 200, "steps": 64}
})";

TEST_CASE("riccati command writes table and passes pattern checks") {
  const fs::path dir = Scratch("riccati");
  const fs::path cfg =
      WriteConfig(dir, R"({"seed": 1, "k": 1, "T": 1, "N": 5})");
  const Run r = Invoke({"riccati", "--config", cfg.string(), "--out",
                        (dir / "out").string()});
  CHECK(r.code == 0);
  const std::string csv = Slurp(dir / "out" / "riccati.csv");
  CHECK(csv.find("\n1,0,0,0,0") != std::string::npos);
  const auto report =
      nlohmann::json::parse(Slurp(dir / "out" / "riccati_report.json"));
  CHECK(report["pass"] == true);
  for (const auto& c : report["checks"]) {
    if (c["name"] == "pattern_max_deviation") CHECK(c["value"] <= 1e-6);
  }
  const auto manifest =
      nlohmann::json::parse(Slurp(dir / "out" / "manifest.json"));
  CHECK(manifest["schema_version"] == kManifestSchemaVersion);
  for (const auto& p : manifest["outputs"]) {
    CHECK(fs::exists(p.get<std::string>()));
  }
}

TEST_CASE("bad k is a configuration error naming field and constraint") {
  const fs::path dir = Scratch("badk");
  const fs::path cfg = WriteConfig(dir, "{\n  \"seed\": 1,\n  \"k\": -1\n}\n");
  const Run r = Invoke({"riccati", "--config", cfg.string(), "--out",
                        (dir / "out").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("'k'") != std::string::npos);
  CHECK(r.err.find("k>0") != std::string::npos);
  CHECK(r.err.find(":3:") != std::string::npos);
}

TEST_CASE("schema rejects unknown fields, wrong types and missing seed") {
  CHECK_THROWS_AS(ParseConfig(R"({"seed": 1, "kk": 2})", "x"), ConfigError);
  CHECK_THROWS_AS(ParseConfig(R"({"seed": 1, "k": "one"})", "x"), ConfigError);
  CHECK_THROWS_AS(ParseConfig(R"({"k": 1})", "x"), ConfigError);
  CHECK_THROWS_AS(ParseConfig(R"({"seed": 1, "rates": {"method": "rk"}})", "x"),
                  ConfigError);
  CHECK_THROWS_AS(ParseConfig("{\"seed\": 1,\n \"k\": }", "x"), ConfigError);
  try {
    ParseConfig(R"({"seed": 1, "initial_law": {"type": "cauchy"}})", "x");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "initial_law.type");
  }
  const RunConfig c = ParseConfig(kTiny, "x");
  CHECK(c.rates.n_schedule.size() == 4);
  CHECK(c.nash.params.N == 2);
}

TEST_CASE("field lines are located through nesting") {
  const std::string text =
      "{\n \"seed\": 1,\n \"rates\": {\n  \"replications\": 3\n },\n"
      " \"nash\": {\n  \"replications\": 5\n }\n}\n";
  CHECK(LineOfField(text, "rates.replications") == 4);
  CHECK(LineOfField(text, "nash.replications") == 7);
  CHECK(LineOfField(text, "absent") == 0);
}

TEST_CASE("unknown selector exits 2 with usage") {
  const fs::path dir = Scratch("selector");
  const fs::path cfg = WriteConfig(dir, kTiny);
  const Run r = Invoke({"rates", "--config", cfg.string(), "--out",
                        (dir / "out").string(), "--experiment", "q9"});
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(Invoke({"frobnicate"}).code == 2);
}

TEST_CASE("rates command outputs and byte identity") {
  const fs::path dir = Scratch("rates");
  const fs::path cfg = WriteConfig(dir, kTiny);
  const Run a = Invoke({"rates", "--config", cfg.string(), "--out",
                        (dir / "a").string(), "--experiment", "iid"});
  const Run b = Invoke({"rates", "--config", cfg.string(), "--out",
                        (dir / "b").string(), "--experiment", "iid",
                        "--workers", "3"});
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  for (const char* f : {"iid_raw.csv", "iid_summary.json", "iid.svg"}) {
    CHECK(fs::exists(dir / "a" / f));
    CHECK(Slurp(dir / "a" / f) == Slurp(dir / "b" / f));
  }
  const Run c = Invoke({"rates", "--config", cfg.string(), "--out",
                        (dir / "c").string(), "--experiment", "iid",
                        "--seed", "12"});
  CHECK(Slurp(dir / "a" / "iid_raw.csv") != Slurp(dir / "c" / "iid_raw.csv"));
  const auto manifest = nlohmann::json::parse(Slurp(dir / "c" / "manifest.json"));
  CHECK(manifest["master_seed"] == 12);
}

TEST_CASE("slope bands drive exit codes") {
  RateEstimate e;
  e.slope = -0.6;
  e.ci_low = -0.7;
  e.ci_high = -0.5;
  CHECK(JudgeSlope(e, {1.0, -0.7, -0.55, ""}) == Verdict::kPass);
  CHECK(JudgeSlope(e, {1.0, -0.57, -0.43, ""}) == Verdict::kInconclusive);
  CHECK(JudgeSlope(e, {1.0, -0.4, -0.3, ""}) == Verdict::kFail);

  const fs::path dir = Scratch("bands");
  const fs::path fail = WriteConfig(dir, R"({
    "seed": 11,
    "rates": {"N_schedule": [8, 16, 32, 64], "replications": 50,
              "bootstrap_resamples": 200,
              "slope_bands": [{"p": 1, "min": 0.5, "max": 1.0, "match": "d=1"}]}
  })");
  CHECK(Invoke({"rates", "--config", fail.string(), "--out",
                (dir / "out").string(), "--experiment", "iid"})
            .code == 1);
}

TEST_CASE("nash command validation and report") {
  const fs::path dir = Scratch("nash");
  const fs::path cfg = WriteConfig(dir, kTiny);
  const Run r = Invoke({"nash", "--config", cfg.string(), "--out",
                        (dir / "out").string()});
  CHECK((r.code == 0 || r.code == 3));
  const auto s = nlohmann::json::parse(Slurp(dir / "out" / "nash_summary.json"));
  CHECK(s["epsilons"].size() == 5);
  CHECK(s["quadratic"].contains("c2"));

  const fs::path no_zero = WriteConfig(
      dir, R"({"seed": 1, "nash": {"N": 2, "epsilons": [-0.1, 0.1, 0.2]}})");
  const Run z = Invoke({"nash", "--config", no_zero.string(), "--out",
                        (dir / "z").string()});
  CHECK(z.code == 2);
  CHECK(z.err.find("contain 0") != std::string::npos);

  const fs::path few = WriteConfig(
      dir, R"({"seed": 1, "nash": {"N": 2, "replications": 10}})");
  CHECK(Invoke({"nash", "--config", few.string(), "--out",
                (dir / "f").string()})
            .code == 2);
}

TEST_CASE("plot annotates slopes") {
  RateEstimate e;
  e.label = "demo";
  e.ns = {8, 16, 32, 64};
  e.means = {1.0, 0.5, 0.25, 0.125};
  e.std_errors = {0.1, 0.05, 0.02, 0.01};
  e.slope = -1.0;
  e.ci_low = -1.1;
  e.ci_high = -0.9;
  const std::string svg = RenderRatePlot({e}, "t<1>");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("slope -1.0000 [-1.1000, -0.9000]") != std::string::npos);
  CHECK(svg.find("t&lt;1&gt;") != std::string::npos);
}

}  // namespace
}  // namespace lqgmfg
