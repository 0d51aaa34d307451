#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csslab/cli.hpp"

using namespace csslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("csslab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int call(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "csslab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config round trips through JSON") {
    RunConfig c;
    c.subcommand = "evolve";
    c.m = 2;
    c.eta_list = {0.3, 0.1};
    c.snapshots = {-0.9, -0.6};
    const RunConfig back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
  }

  TEST_CASE("unknown and ill-typed config fields are rejected") {
    json j = to_json(RunConfig{});
    j["bogus"] = 1;
    CHECK_THROWS_AS(config_from_json(j), ValidationError);
    json k = to_json(RunConfig{});
    k["m"] = "two";
    CHECK_THROWS_AS(config_from_json(k), ValidationError);
  }

  TEST_CASE("validation names the offending field") {
    RunConfig c;
    c.subcommand = "verify";
    c.m = 0;
    try {
      validate(c);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("'m'") != std::string::npos);
    }
    c.m = 1;
    c.n = 1001;
    CHECK_THROWS_AS(validate(c), ValidationError);
  }

  TEST_CASE("subcommand defaults for the grid") {
    RunConfig c;
    c.subcommand = "instability";
    CHECK(resolved(c).r_max == 50.0);
    CHECK(resolved(c).core == 0.2);
    c.subcommand = "evolve";
    CHECK(resolved(c).r_max == 100.0);
    c.r_max = 7.0;
    CHECK(resolved(c).r_max == 7.0);
  }

  TEST_CASE("usage and parse errors exit with a validation code") {
    CHECK(call({}) != 0);
    CHECK(call({"nonsense"}) == kExitValidation);
    CHECK(call({"verify", "--m", "x"}) == kExitValidation);
    CHECK(call({"verify", "--m", "0"}) == kExitValidation);
  }

  TEST_CASE("verify writes a passing ledger and manifest") {
    const fs::path dir = scratch("verify");
    REQUIRE(call({"verify", "--n", "2048", "--out", dir.string()}) == kExitPass);
    const json ledger = read_json(dir / "ledger.json");
    CHECK(ledger.size() >= 20);
    for (const auto& e : ledger) CHECK(e["pass"].get<bool>());
    const json man = read_json(dir / "manifest.json");
    CHECK(man["exit_code"] == 0);
    CHECK(man["config"]["r_max"] == 1e3);
    CHECK(man["checksums"].contains("ledger.json"));
    CHECK(man["checksums"].contains("summary.json"));
  }

  TEST_CASE("config file seeds options and flags override it") {
    const fs::path dir = scratch("config");
    RunConfig c;
    c.subcommand = "profiles";
    c.m = 3;
    c.n = 1024;
    c.out = (dir / "ignored").string();
    write_json(dir / "cfg.json", to_json(c));
    REQUIRE(call({"profiles", "--config", (dir / "cfg.json").string(), "--m", "2", "--out", (dir / "run").string()}) ==
            kExitPass);
    const json man = read_json(dir / "run" / "manifest.json");
    CHECK(man["config"]["m"] == 2);
    CHECK(man["config"]["n"] == 1024);
    const json sum = read_json(dir / "run" / "summary.json");
    CHECK(sum["mass_Q"].get<double>() == doctest::Approx(24 * kPi).epsilon(1e-8));
  }

  TEST_CASE("envcheck maps a sampling gap to a numerical failure") {
    const fs::path dir = scratch("envgap");
    {
      std::ofstream f(dir / "gap.csv");
      f << "t,value\n-1,1\n-0.9,1\n-0.001,1\n";
    }
    CHECK(call({"envcheck", "--series", (dir / "gap.csv").string(), "--eta", "1e-4", "--out", (dir / "o").string()}) ==
          kExitNumerical);
    CHECK(read_json(dir / "o" / "manifest.json")["exit_code"] == kExitNumerical);
  }

  TEST_CASE("envcheck and report end to end") {
    const fs::path dir = scratch("env");
    {
      std::ofstream f(dir / "s.csv");
      f << "t,value\n";
      for (int i = 0; i < 2000; ++i) {
        const double t = -std::exp(-9.0 * i / 1999.0);
        f << t << ',' << std::pow(-t, -0.3) << '\n';
      }
    }
    REQUIRE(call({"envcheck", "--series", (dir / "s.csv").string(), "--eta", "0.01", "--out",
                  (dir / "runs" / "a").string()}) == kExitPass);
    CHECK(read_csv(dir / "runs" / "a" / "tmax.csv").rows() == 2000);
    REQUIRE(call({"report", "--input", (dir / "runs").string(), "--out", (dir / "rep").string()}) == kExitPass);
    const json rep = read_json(dir / "rep" / "report.json");
    CHECK(rep["count"] == 1);
    CHECK(rep["runs"][0]["subcommand"] == "envcheck");
  }

  TEST_CASE("missing input file is a validation error") {
    const fs::path dir = scratch("missing");
    CHECK(call({"envcheck", "--series", (dir / "nope.csv").string(), "--out", dir.string()}) == kExitValidation);
  }
}
