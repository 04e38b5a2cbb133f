#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "aimlake/error.hpp"
#include "aimlake/runner.hpp"
#include "aimlake/util.hpp"
#include "fixtures.hpp"

using namespace aimlake;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_scenario(text, ".");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) return e.what();
    return "wrong kind: " + std::string(e.what());
  }
  return "";
}

std::string scenario(const std::string& name) { return fixture::source_dir() + "/scenarios/" + name + ".yaml"; }

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("aimlake_runner_" + name);
  fs::remove_all(d);
  return d;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "aim-lake");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("scenario defaults and lists") {
  const auto sc = parse_scenario("name: x\naim:\n  tau: 0.02\n", ".");
  CHECK(sc.grid.points == 64);
  CHECK(sc.side_length() == doctest::Approx(2 * std::numbers::pi));
  REQUIRE(sc.aim.tau.size() == 1);
  CHECK(sc.aim.tau[0] == 0.02);
  const auto sc2 = parse_scenario("name: x\naim:\n  tau: [0.01, 0.02]\n", ".");
  CHECK(sc2.aim.tau.size() == 2);
  CHECK(sc.hash != sc2.hash);
  CHECK(sc.hash == parse_scenario("name: x\naim:\n  tau: 0.02\n", ".").hash);
}

TEST_CASE("scenario errors name the offending key") {
  CHECK(config_error("name: x\ngrid:\n  cutof: 3\n").find("grid.cutof") != std::string::npos);
  CHECK(config_error("grid:\n  points: 32\n").find("name") != std::string::npos);
  CHECK(config_error("name: x\ngrid:\n  points: 30\n").find("grid") != std::string::npos);
  CHECK(config_error("name: x\nforcing:\n  kind: Sideways\n").find("forcing.kind") != std::string::npos);
  CHECK(config_error("name: x\nintegrator:\n  dt: 0.5\nfields:\n  eta: \"2\"\n").find("integrator.dt") !=
        std::string::npos);
  CHECK(config_error("name: x\nfields:\n  b: 2 +\n").find("fields.b") != std::string::npos);
  CHECK(config_error("name: x\ndecay:\n  mollifiers: [Boxcar]\n").find("decay.mollifiers") != std::string::npos);
  CHECK(config_error("name: x\n: [\n").find("scenario") != std::string::npos);
  try {
    load_scenario(fixture::source_dir() + "/tests/data/missing_table.yaml");
    FAIL("missing table accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    CHECK(std::string(e.what()).find("fields.b_table") != std::string::npos);
  }
}

TEST_CASE("shipped scenarios parse") {
  for (const char* name : {"reference", "constant", "compliant", "violation", "decay", "chaotic", "unforced", "linear"})
    CHECK_NOTHROW(load_scenario(scenario(name)));
}

TEST_CASE("basis stage on the flat scenario") {
  const auto out = scratch_dir("constant");
  RunOptions opt;
  opt.out_dir = out.string();
  Runner r(load_scenario(scenario("constant")), opt);
  CHECK(r.run("basis") == kExitPass);
  std::ifstream csv(out / "eigenvalues.csv");
  std::string header, first;
  std::getline(csv, header);
  std::getline(csv, first);
  CHECK(header == "index,lambda,k1,k2");
  CHECK(std::stod(first.substr(first.find(',') + 1)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fs::exists(out / "basis_cache"));
  CHECK(fs::exists(out / "eigenvalues.svg"));
  const auto man = nlohmann::json::parse(std::ifstream(out / "manifest.json"));
  CHECK(man["scenario_hash"].get<std::string>().size() == 64);
  CHECK(man["stages"].contains("basis"));
  bool listed = false;
  for (const auto& f : man["files"])
    if (f["path"] == "eigenvalues.csv") listed = f["sha256"] == sha256_file((out / "eigenvalues.csv").string());
  CHECK(listed);
  fs::remove_all(out);
}

TEST_CASE("unforced run: all stages pass and ledgers are reproducible") {
  const auto out = scratch_dir("unforced");
  RunOptions opt;
  opt.out_dir = out.string();
  opt.workers = 2;
  {
    Runner r(load_scenario(scenario("unforced")), opt);
    CHECK(r.run("all") == kExitPass);
    for (const auto& c : r.checks()) CHECK_MESSAGE((c.pass || c.hypothesis), c.stage << ": " << c.name);
  }
  for (const char* f : {"report.md", "decay_report.json", "split_ledger_L0.csv", "trajectory.csv", "aim_report.json",
                        "absorbing.json", "audit_checks.json"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  const auto ledger = sha256_file((out / "split_ledger_L0.csv").string());
  const auto traj = sha256_file((out / "trajectory.csv").string());

  const auto again = scratch_dir("unforced2");
  opt.out_dir = again.string();
  opt.workers = 1;
  Runner r2(load_scenario(scenario("unforced")), opt);
  r2.run("simulate");
  r2.run("decay");
  CHECK(sha256_file((again / "split_ledger_L0.csv").string()) == ledger);
  CHECK(sha256_file((again / "trajectory.csv").string()) == traj);
  fs::remove_all(out);
  fs::remove_all(again);
}

TEST_CASE("a different seed invalidates earlier outputs") {
  const auto out = scratch_dir("seed");
  RunOptions opt;
  opt.out_dir = out.string();
  Runner(load_scenario(scenario("constant")), opt).run("basis");
  CHECK(fs::exists(out / "eigenvalues.csv"));
  opt.seed = 99;
  Runner r(load_scenario(scenario("constant")), opt);
  CHECK_FALSE(fs::exists(out / "eigenvalues.csv"));
  fs::remove_all(out);
}

TEST_CASE("cli exit codes") {
  const auto out = scratch_dir("cli");
  CHECK(cli({"basis", "--scenario", fixture::source_dir() + "/tests/data/missing_table.yaml", "--out", out.string()}) ==
        kExitConfigError);
  CHECK(cli({"basis", "--scenario", fixture::source_dir() + "/tests/data/unknown_key.yaml"}) == kExitConfigError);
  CHECK(cli({"explode", "--scenario", scenario("constant")}) == kExitConfigError);
  CHECK(cli({"basis"}) == kExitConfigError);
  CHECK(cli({"basis", "--scenario", scenario("constant"), "--out", out.string(), "--workers", "2"}) == kExitPass);
  fs::remove_all(out);
}
