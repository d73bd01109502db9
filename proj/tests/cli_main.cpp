#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "secsim/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct run_result {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct temp_dir {
  fs::path path;
  temp_dir() {
    path = fs::temp_directory_path() /
           ("secsim-cli-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~temp_dir() { fs::remove_all(path); }
};

run_result run_cli(const std::string& args, const temp_dir& dir) {
  const fs::path out_file = dir.path / "stdout.txt";
  const fs::path err_file = dir.path / "stderr.txt";
  const std::string cmd = std::string(SECSIM_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  run_result r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

// Coarse numeric grids keep each invocation around a second.
std::string coarse_config_body() {
  return
      "[numerics]\n"
      "theta_points = 181\n"
      "strain_nodes = 9\n"
      "kappa_nodes = 9\n"
      "phi_points = 36\n"
      "echo_points = 41\n"
      "field_points = 221\n";
}

fs::path write_config(const temp_dir& dir, const std::string& name, const std::string& body) {
  const fs::path p = dir.path / name;
  std::ofstream(p) << body;
  return p;
}

std::map<std::string, std::string> parse_report(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace

TEST_CASE("help exits cleanly and lists the subcommands") {
  temp_dir dir;
  const auto r = run_cli("--help", dir);
  CHECK(r.exit_code == 0);
  for (const char* name : {"spectrum", "orientations", "echo", "fit", "sensitivity"})
    CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
  temp_dir dir;
  CHECK(run_cli("spectrum", dir).exit_code == 1);  // --config is required
  CHECK(run_cli("--config /nonexistent.ini spectrum", dir).exit_code == 1);

  const auto cfg = write_config(dir, "bad.ini", "[spin]\nwarp_factor = 9\n");
  const auto r = run_cli("--config " + cfg.string() + " spectrum", dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("warp_factor") != std::string::npos);
  CHECK(r.err.find(":2") != std::string::npos);
}

TEST_CASE("spectrum writes a parseable field sweep") {
  temp_dir dir;
  const auto cfg = write_config(dir, "run.ini", coarse_config_body());
  const auto out = (dir.path / "out").string();
  const auto r = run_cli("--config " + cfg.string() + " --out " + out + " spectrum", dir);
  CHECK(r.exit_code == 0);

  const auto table = secsim::read_csv(out + "/spectrum.csv");
  REQUIRE(table.columns == std::vector<std::string>{"B_mT", "intensity"});
  CHECK(table.rows.size() == 221);
  REQUIRE(table.find_meta("mw_freq_ghz") != nullptr);

  // The sweep must actually contain both absorptive and emissive signal.
  double lo = 1e300, hi = -1e300;
  for (const auto& row : table.rows) {
    lo = std::min(lo, row[1]);
    hi = std::max(hi, row[1]);
  }
  CHECK(hi > 1e-6);
  CHECK(lo < -1e-6);
}

TEST_CASE("spectrum warns and writes zeros for unpolarized populations") {
  temp_dir dir;
  const auto cfg = write_config(dir, "flat.ini",
                                coarse_config_body() +
                                    "[spin]\n"
                                    "pop_plus = 0.3333333333333333\n"
                                    "pop_zero = 0.3333333333333333\n"
                                    "pop_minus = 0.3333333333333333\n");
  const auto out = (dir.path / "out").string();
  const auto r = run_cli("--config " + cfg.string() + " --out " + out + " spectrum", dir);
  CHECK(r.exit_code == 0);
  CHECK(!r.err.empty());  // warning on stderr

  const auto table = secsim::read_csv(out + "/spectrum.csv");
  for (const auto& row : table.rows) CHECK(std::abs(row[1]) < 1e-12);
}

TEST_CASE("orientations at an off-resonant field exit with code 2") {
  temp_dir dir;
  const auto cfg = write_config(dir, "off.ini",
                                coarse_config_body() +
                                    "[experiment]\n"
                                    "field_z_mt = 800\n");
  const auto r = run_cli("--config " + cfg.string() + " --out " + (dir.path / "o").string() +
                             " --position Z orientations",
                         dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("no resonant population") != std::string::npos);
}

TEST_CASE("orientations write distribution, profile, and resonance map") {
  temp_dir dir;
  const auto cfg = write_config(dir, "run.ini", coarse_config_body());
  const auto out = (dir.path / "out").string();
  const auto r =
      run_cli("--config " + cfg.string() + " --out " + out + " --position Z orientations", dir);
  CHECK(r.exit_code == 0);

  const auto dist = secsim::read_csv(out + "/orientations_Z.csv");
  REQUIRE(dist.columns == std::vector<std::string>{"theta_deg", "weight"});
  CHECK(dist.rows.size() == 181);
  double area_like = 0.0;  // crude check that the weights were populated
  for (const auto& row : dist.rows) area_like += row[1];
  CHECK(area_like > 0.0);
  REQUIRE(dist.find_meta("peak_theta_deg") != nullptr);

  const auto profile = secsim::read_csv(out + "/effective_field_Z.csv");
  REQUIRE(profile.columns == std::vector<std::string>{"theta_deg", "Eeff_V_per_m"});
  CHECK(profile.rows.size() == dist.rows.size());

  const auto map = secsim::read_csv(out + "/resonance_map.csv");
  REQUIRE(map.columns == std::vector<std::string>{"theta_deg", "B_mT", "pair", "polarity"});
  CHECK(map.rows.size() > 100);
}

TEST_CASE("echo then fit round-trips the coupling constant") {
  temp_dir dir;
  const auto synth_cfg = write_config(dir, "synth.ini", coarse_config_body());
  const auto out = (dir.path / "curves").string();

  const auto echo = run_cli("--config " + synth_cfg.string() + " --out " + out + " echo", dir);
  CHECK(echo.exit_code == 0);
  for (const char* name :
       {"echo_Z_par.csv", "echo_Z_perp.csv", "echo_Int_par.csv", "echo_Int_perp.csv",
        "echo_XY_par.csv", "echo_XY_perp.csv", "echo_summary.csv"})
    CHECK(fs::exists(fs::path(out) / name));

  const auto z_par = secsim::read_csv(out + "/echo_Z_par.csv");
  REQUIRE(z_par.columns ==
          std::vector<std::string>{"t_E_us", "in_phase", "quadrature"});
  CHECK(z_par.rows.front()[1] == doctest::Approx(1.0));
  REQUIRE(z_par.find_meta("position") != nullptr);
  CHECK(*z_par.find_meta("position") == "Z");

  // Fit from a deliberately wrong starting point; data_dir picks up the
  // synthesized curves (echo_summary.csv is rejected for its missing
  // metadata, so point the fit at the six echo files explicitly).
  const auto fit_cfg = write_config(dir, "fit.ini",
                                    coarse_config_body() +
                                        "[sec]\n"
                                        "kappa_hz_per_v_per_m = 0.40\n"
                                        "sigma_kappa_hz_per_v_per_m = 0.08\n");
  std::string files;
  for (const char* name :
       {"echo_Z_par.csv", "echo_Z_perp.csv", "echo_Int_par.csv", "echo_Int_perp.csv",
        "echo_XY_par.csv", "echo_XY_perp.csv"})
    files += " " + (fs::path(out) / name).string();
  const auto fit_out = (dir.path / "fit").string();
  const auto fit =
      run_cli("--config " + fit_cfg.string() + " --out " + fit_out + " fit" + files, dir);
  CHECK(fit.exit_code == 0);
  CHECK(fit.out.find("kappa") != std::string::npos);

  const auto report = parse_report(fs::path(fit_out) / "fit_result.txt");
  REQUIRE(report.count("kappa_hz_per_v_per_m") == 1);
  const double kappa = std::stod(report.at("kappa_hz_per_v_per_m"));
  const double sigma = std::stod(report.at("sigma_kappa_hz_per_v_per_m"));
  CHECK(std::abs(kappa - 0.59) < 0.01 * 0.59);
  CHECK(std::abs(sigma - 0.15) < 0.05 * 0.15);
  CHECK(report.at("converged") == "true");
  CHECK(std::stoi(report.at("n_curves")) == 6);
  CHECK(fs::exists(fs::path(fit_out) / "fit_overlay_Z_par.csv"));
}

TEST_CASE("fit without data exits with a usage error") {
  temp_dir dir;
  const auto cfg = write_config(dir, "run.ini", coarse_config_body());
  const auto r = run_cli("--config " + cfg.string() + " fit", dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("data") != std::string::npos);
}

TEST_CASE("sensitivity prints the per-position table") {
  temp_dir dir;
  const auto cfg = write_config(dir, "run.ini", coarse_config_body());
  const auto out = (dir.path / "out").string();
  const auto r = run_cli("--config " + cfg.string() + " --out " + out + " sensitivity", dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("0.36") != std::string::npos);  // reported range is echoed

  const auto table = secsim::read_csv(out + "/sensitivity.csv");
  CHECK(table.rows.size() == 6);  // 3 positions x 2 geometries
  const int col = table.column_index("sensitivity_hz_per_v_per_m");
  REQUIRE(col >= 0);
  for (const auto& row : table.rows) CHECK(row[col] > 0.0);
}
