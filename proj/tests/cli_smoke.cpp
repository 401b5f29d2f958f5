// Runs the command-line tool on small inputs and checks outputs and errors.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"

#include "bhtrace/io.hpp"

using namespace bhtrace;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "bhtrace_cli_smoke";

struct Result {
  int status;
  std::string out, err;
};

Result run(const std::string& args) {
  fs::create_directories(kRoot);
  const std::string o = (kRoot / "stdout.txt").string(), e = (kRoot / "stderr.txt").string();
  std::string cmd = std::string(BHTRACE_CLI_PATH) + " " + args + " > " + o + " 2> " + e;
  int st = std::system(cmd.c_str());
  return {st, read_text(o), read_text(e)};
}

std::string model_file() {
  fs::create_directories(kRoot);
  std::string p = (kRoot / "free2.json").string();
  write_text(p, R"({"label": "free2", "L": 2, "H": [[[1, 0], [0, 0]], [[0, 0], [1.4142135623730951, 0]]]})");
  return p;
}

}  // namespace

TEST_CASE("basis prints the sector dimension") {
  auto r = run("basis --L 3 --N 3 --out " + (kRoot / "basis").string());
  CHECK(r.status == 0);
  CHECK(r.out == "10\n");
  CHECK(fs::exists(kRoot / "basis" / "manifest_basis.json"));
}

TEST_CASE("ed, freefield-dos and compare") {
  const std::string m = model_file(), out = (kRoot / "pipe").string();
  REQUIRE(run("ed --model " + m + " --N 10 --sigma-rel 0.05 --out " + out).status == 0);
  REQUIRE(run("freefield-dos --model " + m + " --N 10 --sigma-rel 0.05 --samples 1000000 --seed 3 --out " + out).status == 0);
  auto c = run("compare --a " + out + "/freefield_dos.csv --b " + out + "/ed_dos.csv --out " + out);
  REQUIRE(c.status == 0);
  REQUIRE(c.out.rfind("relative_l2=", 0) == 0);
  const double d = std::stod(c.out.substr(12));
  CHECK(d < 0.05);

  auto dos = read_csv(out + "/freefield_dos.csv");
  CHECK(dos.names == std::vector<std::string>{"E", "rho_exact_smoothed", "rho_weyl", "rho_weyl_stderr", "rho_osc", "rho_total"});
  const std::string text = read_text(out + "/ed_spectrum.csv");
  CHECK(text.rfind("# bhtrace ed config=", 0) == 0);
  CHECK(text.find("\nindex,energy\n") != std::string::npos);
}

TEST_CASE("trace with an empty library equals the Weyl term") {
  const std::string m = model_file(), out = (kRoot / "trace").string();
  fs::create_directories(out);
  write_text(out + "/empty.json", R"({"families": []})");
  auto r = run("trace --model " + m + " --N 4 --sigma 0.1 --samples 20000 --library " + out +
               "/empty.json --out " + out);
  REQUIRE(r.status == 0);
  auto t = read_csv(out + "/trace_dos.csv");
  for (std::size_t i = 0; i < t.rows(); ++i) {
    CHECK(t.column("rho_osc")[i] == 0.0);
    CHECK(t.column("rho_total")[i] == t.column("rho_weyl")[i]);
  }
}

TEST_CASE("orbit-find and trace on the free field") {
  const std::string m = model_file(), out = (kRoot / "orbits").string();
  REQUIRE(run("orbit-find --model " + m + " --N 2 --free --kmax 3 --out " + out).status == 0);
  auto lib = load_orbit_library(out + "/orbits.json");
  CHECK(lib.families.size() == 6);
  CHECK(lib.subcommand == "orbit-find");
  REQUIRE(run("trace --model " + m + " --N 2 --sigma 0.1 --samples 20000 --library " + out +
              "/orbits.json --out " + out).status == 0);
}

TEST_CASE("interacting orbit search writes a library") {
  fs::create_directories(kRoot);
  const std::string m = (kRoot / "dimer.json").string(), out = (kRoot / "dimer").string();
  write_text(m, R"({"L": 2, "H": [[0, -1], [-1, 0]], "U": [[1,1,1,1,0.1],[2,2,2,2,0.1]]})");
  auto r = run("orbit-find --model " + m + " --N 20 --dE 1 --csteps 3 --out " + out);
  REQUIRE(r.status == 0);
  auto lib = load_orbit_library(out + "/orbits.json");
  CHECK(lib.families.size() >= 2);
  REQUIRE(run("fixed-points --model " + m + " --N 20 --out " + out).status == 0);
  REQUIRE(run("evolve --model " + m + " --psi0 3,0,0,1 --tmax 5 --steps 50 --out " + out).status == 0);
  auto tr = read_csv(out + "/trajectory.csv");
  CHECK(tr.rows() == 51);
  CHECK(tr.names.back() == "E");
  REQUIRE(run("time-spectrum --model " + m + " --N 20 --tmax 10 --out " + out).status == 0);
  CHECK(fs::exists(out + "/time_spectrum_peaks.csv"));
}

TEST_CASE("errors are one line on stderr") {
  auto r = run("ed --model /nonexistent.json --N 3 --out " + (kRoot / "err").string());
  CHECK(r.status != 0);
  CHECK(r.err.rfind("error: io: ", 0) == 0);
  CHECK(r.err.find('\n') == r.err.size() - 1);
  auto u = run("nonsense");
  CHECK(u.status != 0);
  CHECK(u.err.rfind("error: ", 0) == 0);
}

TEST_CASE("environment overrides") {
  const std::string out = (kRoot / "env").string();
  auto r = run("basis --L 4 --out " + out + " BHTRACE_N=2");
  CHECK(r.status != 0);  // the variable must be in the environment, not argv
  std::string cmd = "BHTRACE_N=2 " + std::string(BHTRACE_CLI_PATH) + " basis --L 4 --out " + out +
                    " > " + (kRoot / "env.txt").string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(read_text((kRoot / "env.txt").string()) == "10\n");
}
