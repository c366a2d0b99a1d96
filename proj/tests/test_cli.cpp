#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "biphoton/config.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("BIPHOTON_CLI");
  REQUIRE_MESSAGE(p != nullptr, "BIPHOTON_CLI must point at the binary");
  return p;
}

int run(const std::string& args) {
  std::string cmd = cli() + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "biphoton_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), (p.string() + " missing"));
  int n = 0;
  std::string l;
  while (std::getline(in, l))
    if (!l.empty()) ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("usage and config errors exit 1") {
  CHECK(run("") == 1);                                   // missing subcommand
  CHECK(run("simulate --config /no/such/file") == 1);    // missing config
  CHECK(run("simulate --no-such-flag") == 1);
  CHECK(run("limit --rho 1.0") == 1);                    // degenerate rho
  CHECK(run("simulate --fsd 0x30") == 1);                // malformed detector
}

TEST_CASE("criterion violations exit 2 and name the plane") {
  fs::path d = fresh_dir("bad_grid");
  fs::path cfg = d / "bad.cfg";
  {
    std::ofstream f(cfg);
    f << biphoton::serialize(biphoton::default_paper_system());
    f << "grid.signal_lens1_n = 64\n";
  }
  std::string cmd = cli() + " limit --config " + cfg.string() + " --out " +
                    d.string() + " 2> " + (d / "err.txt").string();
  int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  std::string err = slurp(d / "err.txt");
  CHECK(err.find("sampling criterion") != std::string::npos);
  CHECK(err.find("lens-1") != std::string::npos);
}

TEST_CASE("limit reproduces the impulse-response width") {
  fs::path d = fresh_dir("limit");
  REQUIRE(run("limit --out " + d.string()) == 0);
  std::string csv = slurp(d / "limit.csv");
  CHECK(csv.find("w_paper_nm") == 0);
  double w = std::stod(csv.substr(csv.find('\n') + 1));
  CHECK(w == doctest::Approx(142.163).epsilon(0.02));
}

TEST_CASE("simulate writes the scenario row and profiles") {
  fs::path d = fresh_dir("simulate");
  REQUIRE(run("simulate --fs-mm 30 --rho 0.9 --pld 0 --out " + d.string()) == 0);
  CHECK(count_lines(d / "results.csv") == 2);  // header + one scenario
  std::string row = slurp(d / "results.csv");
  CHECK(row.find("fs30_rho0.9_pld") != std::string::npos);
  // quoted widths of the operating point, within 5%
  std::istringstream in(row.substr(row.find('\n') + 1));
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(in, field, ',')) fields.push_back(field);
  REQUIRE(fields.size() == 14);
  CHECK(std::stod(fields[6]) == doctest::Approx(385.88).epsilon(0.05));
  CHECK(std::stod(fields[7]) == doctest::Approx(188.84).epsilon(0.05));
  CHECK(fs::exists(d / "profile_nonheralded.csv"));
  CHECK(fs::exists(d / "profile_heralded.csv"));

  // idempotent overwrite: identical content on rerun
  std::string first = slurp(d / "results.csv");
  REQUIRE(run("simulate --fs-mm 30 --rho 0.9 --pld 0 --out " + d.string()) == 0);
  CHECK(slurp(d / "results.csv") == first);
}

TEST_CASE("sweep row counts and plots") {
  fs::path d = fresh_dir("sweep");
  REQUIRE(run("sweep --points 3 --rho 0 --plot --out " + d.string()) == 0);
  CHECK(count_lines(d / "results.csv") == 4);  // header + 3 f_s points
  CHECK(fs::exists(d / "sweep_width_rho0.svg"));
  CHECK(fs::exists(d / "sweep_transmission_rho0.svg"));
  CHECK(slurp(d / "sweep_width_rho0.svg").find("<svg") == 0);
}

TEST_CASE("verify passes on the reference configuration") {
  fs::path d = fresh_dir("verify");
  std::string cmd = cli() + " verify --rho 0.9 > " + (d / "out.txt").string() +
                    " 2>&1";
  int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 0);
  std::string out = slurp(d / "out.txt");
  CHECK(out.find("FAIL") == std::string::npos);
  CHECK(out.find("PASS  open-aperture covariance") != std::string::npos);
  CHECK(out.find("all checks passed") != std::string::npos);
}
