#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kahlerlab/cli.hpp"
#include "kahlerlab/error.hpp"

using namespace kahlerlab;
namespace kc = kahlerlab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kahlerlab_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Exit status of the installed tool.
int run_tool(const std::string& args) {
  const std::string cmd = std::string(KAHLERLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string error_of(const std::string& text) {
  try {
    kc::parse_scenario(text, "cfg.ini");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("scenario parsing") {
  const auto s = kc::parse_scenario(
      "task = flow\nn = 3\nseed = 7\n[grid]\nr_max = 1e4\nnodes = 512\n"
      "[profile]\nfamily = eventually_constant\na = 0.5\n[flow]\nt_end = 0.02\nmonitors = ad\n");
  CHECK(s.task == "flow");
  CHECK(s.n == 3);
  CHECK(s.seed == 7);
  CHECK(s.r_max == 1e4);
  CHECK(s.nodes == 512);
  CHECK(s.profile == "eventually_constant:a=0.5");
  CHECK(s.get("flow.t_end", 0.0) == 0.02);
  CHECK(s.get_string("flow.monitors", "") == "ad");
  CHECK(s.get("flow.tol", 3.0) == 3.0);
}

TEST_CASE("config errors name the line and field") {
  const auto unknown = error_of("task = profile\n[grid]\nnodes = 64\nwidth = 3\n");
  CHECK(unknown.find("cfg.ini:4") != std::string::npos);
  CHECK(unknown.find("grid.width") != std::string::npos);
  CHECK(unknown.find("unknown key") != std::string::npos);

  const auto bad_number = error_of("task = profile\n\n[grid]\nr_max = lots\n");
  CHECK(bad_number.find("cfg.ini:4") != std::string::npos);
  CHECK(bad_number.find("grid.r_max") != std::string::npos);

  CHECK(error_of("task = sing\n").find("unknown task") != std::string::npos);
  CHECK(error_of("bad line\n").find("unknown key") != std::string::npos);
  CHECK(error_of("[nowhere]\nx = 1\n").find("unknown section") != std::string::npos);
  CHECK(error_of("n = 2.5\n").find("field 'n'") != std::string::npos);
  CHECK(error_of("[profile]\nfamily = nosuch\n").find("nosuch") != std::string::npos);
  CHECK(error_of("[flow]\nt_end = soon\n").find("flow.t_end") != std::string::npos);
}

TEST_CASE("profile specs") {
  CHECK(kc::parse_profile_spec("flat")->eval(5.0) == 0.0);
  CHECK(kc::parse_profile_spec("rational:scale=2")->eval(1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(kc::parse_profile_spec("rational:scale"), Error);
  CHECK_THROWS_AS(kc::parse_profile_spec("rational:scale=x"), Error);

  const auto dir = scratch("spec");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "p.ini") << "family = eventually_constant\na = 0.25\nr0 = 4\n";
    std::ofstream(dir / "k.csv") << "r,xi,xi_prime\n0,0,0\n1,0.5,0\n";
  }
  CHECK(kc::parse_profile_spec((dir / "p.ini").string())->eval(10.0) == doctest::Approx(0.25));
  CHECK(kc::parse_profile_spec((dir / "k.csv").string())->eval(3.0) == doctest::Approx(0.5));
}

TEST_CASE("fnv1a and number formatting") {
  CHECK(kc::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(kc::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(kc::hex64(255) == "00000000000000ff");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) CHECK(std::stod(kc::fmt(v)) == v);
}

TEST_CASE("profile task output: headers, manifest, flat curvature") {
  kc::Scenario s;
  s.task = "profile";
  s.profile = "flat";
  s.nodes = 256;
  s.out_dir = scratch("profile").string();
  std::ostringstream log;
  REQUIRE(kc::dispatch(s, log) == kc::kOk);

  const auto curv = slurp(fs::path(s.out_dir) / "curvature.csv");
  std::istringstream in(curv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# kahlerlab " + std::string(kc::tool_version()));
  std::getline(in, line);
  CHECK(line == "# scenario_hash " + kc::hex64(s.hash()));
  std::getline(in, line);
  CHECK(line == "# seed 1");
  std::getline(in, line);
  CHECK(line == "r,A,B,C,R,xi_prime_over_h");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    while (std::getline(row, cell, ',')) CHECK(std::stod(cell) == 0.0);
  }
  CHECK(rows == 257);

  // Manifest hashes match the bytes on disk.
  std::istringstream man(slurp(fs::path(s.out_dir) / "manifest"));
  int listed = 0;
  while (std::getline(man, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto hash = line.substr(0, 16);
    const auto name = line.substr(18);
    CHECK(kc::hex64(kc::fnv1a64(slurp(fs::path(s.out_dir) / name))) == hash);
    ++listed;
  }
  CHECK(listed == 3);
  for (const auto& e : fs::directory_iterator(s.out_dir)) CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("repeated runs are byte-identical") {
  for (const std::string task : {"profile", "geometry", "estimate"}) {
    kc::Scenario s;
    s.task = task;
    s.profile = "eventually_constant:a=0.5";
    s.params["estimate.K"] = "1";
    s.out_dir = scratch(task + "_1").string();
    std::ostringstream log;
    REQUIRE(kc::dispatch(s, log) == kc::kOk);
    const auto first = slurp(fs::path(s.out_dir) / "manifest");
    s.out_dir = scratch(task + "_2").string();
    REQUIRE(kc::dispatch(s, log) == kc::kOk);
    CHECK(slurp(fs::path(s.out_dir) / "manifest") == first);
  }
}

TEST_CASE("flow task: refusal and ledger") {
  kc::Scenario s;
  s.task = "flow";
  s.profile = "eventually_constant:a=2";
  s.out_dir = scratch("flow_refuse").string();
  std::ostringstream log;
  CHECK(kc::dispatch(s, log) == kc::kError);
  CHECK(log.str().find("completeness_check") != std::string::npos);

  s.profile = "cigar";
  s.params["flow.reference"] = "poly_cap";
  s.params["flow.t_end"] = "0.02";
  s.params["flow.tick_every"] = "0.01";
  s.out_dir = scratch("flow_ok").string();
  REQUIRE(kc::dispatch(s, log) == kc::kOk);
  const auto ledger = slurp(fs::path(s.out_dir) / "ledger.csv");
  CHECK(ledger.find("t,monitor_id,worst_node_r,residual") != std::string::npos);
  CHECK(ledger.find(",a,") != std::string::npos);
  CHECK(fs::exists(fs::path(s.out_dir) / "snapshot_002.csv"));
}

TEST_CASE("verify suite passes and flags the designed failure") {
  const auto rep = kc::verify_suite(kc::default_corpus());
  for (const auto& it : rep.items) {
    INFO(it.check, " ", it.profile, " ", it.detail);
    CHECK(it.passed);
  }
  CHECK(rep.all_passed());
  bool saw_incomplete = false;
  for (const auto& it : rep.items) saw_incomplete |= it.profile == "incomplete_xi_2";
  CHECK(saw_incomplete);
}

TEST_CASE("tool exit codes") {
  const auto dir = scratch("tool");
  CHECK(run_tool("--version") == 0);
  CHECK(run_tool("profile --profile cigar --out-dir " + (dir / "p").string()) == 0);
  CHECK(run_tool("flow --profile eventually_constant:a=2 --out-dir " + (dir / "f").string()) == 1);
  CHECK(run_tool("profile --config " + (dir / "missing.ini").string()) == 1);
  CHECK(run_tool("nosuch") != 0);
  fs::create_directories(dir);
  std::ofstream(dir / "bad.ini") << "task = profile\n[grid]\nnodes = many\n";
  CHECK(run_tool("profile --config " + (dir / "bad.ini").string()) == 1);
}
