#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "secsim/config.hpp"
#include "secsim/csv.hpp"
#include "secsim/errors.hpp"

using namespace secsim;

namespace {

template <typename Error, typename Fn>
std::string capture_message(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

struct temp_dir {
  std::filesystem::path path;
  temp_dir() {
    path = std::filesystem::temp_directory_path() /
           ("secsim-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~temp_dir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("empty config text yields the defaults") {
  const run_config parsed = parse_config_text("");
  CHECK(parsed == run_config{});
  CHECK(parsed.spin.d_mhz == doctest::Approx(317.0));
  CHECK(!parsed.experiment.field_z_mt.has_value());
  CHECK(parsed.experiment.field_int_mt == 340.0);
}

TEST_CASE("config serialization round-trips") {
  run_config cfg;
  cfg.spin.d_mhz = -250.5;
  cfg.spin.pops.p_plus = 0.2;
  cfg.spin.pops.p_zero = 0.5;
  cfg.spin.pops.p_minus = 0.3;
  cfg.experiment.field_z_mt = 333.25;
  cfg.experiment.field_xy_mt.reset();
  cfg.experiment.geometry = "par";
  cfg.experiment.t2_us = 7.5;
  cfg.numerics.theta_points = 181;
  cfg.numerics.root_tol_mhz = 5e-4;
  cfg.sec.kappa_hz_per_v_per_m = 0.61;
  cfg.delta_f_min_hz = 31000.0;
  cfg.paths.data_dir = "measurements";

  const std::string text = serialize_config(cfg);
  const run_config reparsed = parse_config_text(text, "round-trip");
  CHECK(reparsed == cfg);

  // Auto positions survive as the literal keyword.
  CHECK(text.find("field_xy_mt = auto") != std::string::npos);
  CHECK(text.find("field_z_mt = 333.25") != std::string::npos);
}

TEST_CASE("config errors carry origin, line, and key") {
  const std::string unknown_key = capture_message<config_error>(
      [] { parse_config_text("[spin]\nno_such_knob = 1\n", "bad.ini"); });
  CHECK(unknown_key.find("bad.ini:2") != std::string::npos);
  CHECK(unknown_key.find("no_such_knob") != std::string::npos);

  const std::string unknown_section = capture_message<config_error>(
      [] { parse_config_text("[warp]\n", "bad.ini"); });
  CHECK(unknown_section.find("bad.ini:1") != std::string::npos);
  CHECK(unknown_section.find("warp") != std::string::npos);

  const std::string bad_number = capture_message<config_error>(
      [] { parse_config_text("[spin]\ng = fast\n", "bad.ini"); });
  CHECK(bad_number.find("bad.ini:2") != std::string::npos);

  const std::string no_section = capture_message<config_error>(
      [] { parse_config_text("g = 2.0\n", "bad.ini"); });
  CHECK(no_section.find("bad.ini:1") != std::string::npos);
}

TEST_CASE("validation names the offending key") {
  run_config cfg;
  cfg.spin.d_strain_fwhm_mhz = -1.0;
  const std::string msg =
      capture_message<config_error>([&] { cfg.validate(); });
  CHECK(msg.find("d_strain_fwhm_mhz") != std::string::npos);

  run_config bad_geo;
  bad_geo.experiment.geometry = "diagonal";
  CHECK(capture_message<config_error>([&] { bad_geo.validate(); }).find("geometry") !=
        std::string::npos);

  run_config bad_pop;
  bad_pop.spin.pops.p_plus = 0.9;  // sum != 1
  CHECK_THROWS_AS(bad_pop.validate(), config_error);

  run_config bad_theta;
  bad_theta.numerics.theta_points = 2;
  CHECK(capture_message<config_error>([&] { bad_theta.validate(); }).find("theta_points") !=
        std::string::npos);
}

TEST_CASE("auto keyword and duplicate keys") {
  const run_config cfg = parse_config_text(
      "[experiment]\n"
      "field_int_mt = auto\n"
      "field_z_mt = 335.2\n"
      "field_z_mt = 336.0\n",  // last assignment wins
      "dup.ini");
  CHECK(!cfg.experiment.field_int_mt.has_value());
  CHECK(cfg.experiment.field_z_mt == 336.0);
}

TEST_CASE("comments and blank lines are ignored") {
  const run_config cfg = parse_config_text(
      "# full-line hash comment\n"
      "; semicolon comment\n"
      "\n"
      "[spin]\n"
      "d_mhz = 300\n",
      "c.ini");
  CHECK(cfg.spin.d_mhz == 300.0);
}

TEST_CASE("missing config file") {
  const std::string msg = capture_message<config_error>(
      [] { parse_config("/nonexistent/nowhere.ini"); });
  CHECK(msg.find("cannot open config file") != std::string::npos);
}

TEST_CASE("format_double round-trips exactly") {
  for (const double v : {0.0, 1.0, -317.0, 0.1, 1e-3, 1.5e6, 335.19704218,
                         2.0 / 3.0, 1e300, -1e-300}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("csv write-read round trip preserves everything") {
  temp_dir dir;
  const auto file = (dir.path / "table.csv").string();

  csv_table table;
  table.metadata = {{"position", "Z"}, {"tau_us", "2"}, {"note", "a = b"}};
  table.columns = {"t_E_us", "echo", "sigma"};
  table.rows = {{0.0, 1.0, 0.01}, {0.05, 0.99987, 0.01}, {1.0, -0.685, 0.02}};
  write_csv(file, table);

  const csv_table back = read_csv(file);
  REQUIRE(back.columns == table.columns);
  REQUIRE(back.rows.size() == table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      CHECK(back.rows[r][c] == table.rows[r][c]);

  REQUIRE(back.find_meta("position") != nullptr);
  CHECK(*back.find_meta("position") == "Z");
  REQUIRE(back.find_meta("note") != nullptr);
  CHECK(*back.find_meta("note") == "a = b");  // value keeps its inner '='
  CHECK(back.find_meta("absent") == nullptr);

  CHECK(back.column_index("echo") == 1);
  CHECK(back.column_index("missing") == -1);
}

TEST_CASE("csv reader rejects malformed input") {
  const std::string ragged =
      "t_E_us,echo\n"
      "0.0,1.0\n"
      "0.05\n";
  const std::string msg = capture_message<data_error>(
      [&] { read_csv_text(ragged, "r.csv"); });
  CHECK(msg.find("r.csv:3") != std::string::npos);

  const std::string bad_value =
      "t_E_us,echo\n"
      "0.0,one\n";
  CHECK(capture_message<data_error>([&] { read_csv_text(bad_value, "v.csv"); })
            .find("v.csv:2") != std::string::npos);

  CHECK_THROWS_AS(read_csv_text("", "empty.csv"), data_error);
  CHECK_THROWS_AS(read_csv_text("# only = comments\n", "empty.csv"), data_error);
  CHECK_THROWS_AS(read_csv_text("a,,c\n1,2,3\n", "anon.csv"), data_error);
  CHECK_THROWS_AS(read_csv("/nonexistent/missing.csv"), data_error);
}

TEST_CASE("csv writer refuses inconsistent tables") {
  temp_dir dir;
  const auto file = (dir.path / "bad.csv").string();

  csv_table no_columns;
  CHECK_THROWS_AS(write_csv(file, no_columns), data_error);

  csv_table ragged;
  ragged.columns = {"a", "b"};
  ragged.rows = {{1.0, 2.0}, {3.0}};
  CHECK_THROWS_AS(write_csv(file, ragged), data_error);
  CHECK(!std::filesystem::exists(file));  // failed writes leave nothing behind
}

TEST_CASE("csv metadata lines survive header comments without equals") {
  const csv_table t = read_csv_text(
      "# generated for regression use\n"
      "# tau_us = 2\n"
      "t_E_us,echo\n"
      "0,1\n",
      "m.csv");
  CHECK(t.find_meta("tau_us") != nullptr);
  CHECK(t.rows.size() == 1);
}
