#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "homlab/experiment.hpp"
#include "json.hpp"

using namespace homlab;
namespace fs = std::filesystem;

namespace {

fs::path workdir() {
  static fs::path p = [] {
    fs::path d = fs::temp_directory_path() / "homlab_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::path p = workdir() / (name + ".yaml");
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(HOMLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallLimit =
    "kind: limit\n"
    "geometry:\n  domain: torus\n  dimension: 2\n  n_per_cell: 16\n  limit_resolution: 32\n"
    "physics:\n  force: ['sin(2*pi*y)', '0']\n"
    "time:\n  T: 0.002\n  output_interval: 0.001\n";

}  // namespace

TEST_CASE("invariant suite passes") {
  std::ostringstream log;
  auto rows = run_invariant_checks(7, log);
  CHECK(rows.size() >= 20);
  for (const auto& r : rows) {
    CAPTURE(r.module + ": " + r.check);
    CHECK(r.pass);
  }
}

TEST_CASE("check subcommand writes check.csv and a manifest") {
  auto cfg = write_config("check", "kind: check\nseed: 3\n");
  auto out = workdir() / "check";
  REQUIRE(run("check --config " + cfg.string() + " --out " + out.string()) == 0);
  const std::string csv = slurp(out / "check.csv");
  CHECK(csv.rfind("module,check,value,threshold,status\n", 0) == 0);
  CHECK(csv.find("FAIL") == std::string::npos);
  auto man = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(man.contains("version"));
  CHECK(man["seed"] == 3);
  CHECK(man.contains("config"));
}

TEST_CASE("identical config and seed give identical CSV output") {
  auto cfg = write_config("limit", kSmallLimit);
  auto a = workdir() / "limit_a", b = workdir() / "limit_b";
  REQUIRE(run("limit --config " + cfg.string() + " --out " + a.string()) == 0);
  REQUIRE(run("limit --config " + cfg.string() + " --out " + b.string() + " --jobs 2") == 0);
  const std::string ca = slurp(a / "limit.csv");
  CHECK_FALSE(ca.empty());
  CHECK(ca == slurp(b / "limit.csv"));
}

TEST_CASE("cell subcommand writes the permeability") {
  auto cfg = write_config("cell", "kind: cell\ngeometry:\n  dimension: 2\n  n_per_cell: 32\n");
  auto out = workdir() / "cell";
  REQUIRE(run("cell --config " + cfg.string() + " --out " + out.string()) == 0);
  const std::string csv = slurp(out / "cell_K.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 2x2 entries
  CHECK(fs::exists(out / "cell_report.csv"));
}

TEST_CASE("nse subcommand runs the relative-energy check") {
  auto cfg = write_config("nse",
                          "kind: nse\n"
                          "geometry:\n  dimension: 2\n  epsilon: [0.25]\n  n_per_cell: 16\n  limit_resolution: 32\n"
                          "time:\n  T: 0.002\n  output_interval: 0.001\n");
  auto out = workdir() / "nse";
  REQUIRE(run("nse --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "energy.csv"));
  CHECK(fs::exists(out / "relen.csv"));
  CHECK(fs::exists(out / "nse_summary.csv"));
}

TEST_CASE("configuration errors exit with status 1 and an error record") {
  auto bad = write_config("bad", "kind: nse\ngeometry:\n  dimension: 2\n  epsilon: [0.2]\n");
  auto out = workdir() / "bad";
  CHECK(run("nse --config " + bad.string() + " --out " + out.string()) == 1);
  auto err = nlohmann::json::parse(slurp(out / "error.json"));
  CHECK(err["exit_code"] == 1);

  auto mismatch = write_config("mismatch", "kind: check\n");
  CHECK(run("cell --config " + mismatch.string() + " --out " + (workdir() / "mm").string()) == 1);
  CHECK(run("cell") == 1);
  CHECK(run("cell --config /nonexistent.yaml") == 1);
}
