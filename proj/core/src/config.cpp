#include "secsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "secsim/csv.hpp"
#include "secsim/errors.hpp"

namespace secsim {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw config_error(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& value, const std::string& key, const std::string& origin,
                    int line) {
  const std::string v = trim(value);
  const char* begin = v.data();
  const char* end = v.data() + v.size();
  double out{};
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end)
    fail(origin, line, "invalid number '" + v + "' for key '" + key + "'");
  return out;
}

int parse_int(const std::string& value, const std::string& key, const std::string& origin,
              int line) {
  const std::string v = trim(value);
  const char* begin = v.data();
  const char* end = v.data() + v.size();
  int out{};
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end)
    fail(origin, line, "invalid integer '" + v + "' for key '" + key + "'");
  return out;
}

std::optional<double> parse_field_or_auto(const std::string& value, const std::string& key,
                                          const std::string& origin, int line) {
  if (trim(value) == "auto") return std::nullopt;
  return parse_double(value, key, origin, line);
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw config_error("config key '" + key + "': " + what);
}

}  // namespace

void run_config::validate() const {
  spin.validate();
  sec.validate();
  require(experiment.mw_freq_ghz > 0.0, "mw_freq_ghz", "must be positive");
  require(experiment.tau_us > 0.0, "tau_us", "must be positive");
  require(experiment.e_field_v_per_m >= 0.0, "e_field_v_per_m", "must be >= 0");
  require(experiment.excitation_fwhm_mhz > 0.0, "excitation_fwhm_mhz", "must be positive");
  require(experiment.linewidth_fwhm_mhz > 0.0, "linewidth_fwhm_mhz", "must be positive");
  require(experiment.t2_us >= 0.0, "t2_us", "must be >= 0 (0 disables the decay factor)");
  require(experiment.field_min_mt > 0.0, "field_min_mt", "must be positive");
  require(experiment.field_max_mt > experiment.field_min_mt, "field_max_mt",
          "must exceed field_min_mt");
  for (const auto& [key, value] :
       {std::pair<const char*, std::optional<double>>{"field_z_mt", experiment.field_z_mt},
        {"field_int_mt", experiment.field_int_mt},
        {"field_xy_mt", experiment.field_xy_mt}}) {
    if (value) require(*value > 0.0, key, "must be positive (or 'auto')");
  }
  require(experiment.geometry == "par" || experiment.geometry == "perp" ||
              experiment.geometry == "both",
          "geometry", "must be par|perp|both");
  require(numerics.theta_points >= 3, "theta_points", "must be >= 3");
  require(numerics.strain_nodes >= 1, "strain_nodes", "must be >= 1");
  require(numerics.kappa_nodes >= 1, "kappa_nodes", "must be >= 1");
  require(numerics.phi_points >= 4, "phi_points", "must be >= 4");
  require(numerics.echo_points >= 2, "echo_points", "must be >= 2");
  require(numerics.field_points >= 2, "field_points", "must be >= 2");
  require(numerics.root_tol_mhz > 0.0, "root_tol_mhz", "must be positive");
  require(delta_f_min_hz >= 0.0, "delta_f_min_hz", "must be >= 0");
}

run_config parse_config_text(const std::string& text, const std::string& origin) {
  run_config cfg;
  std::istringstream stream(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(stream, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(origin, line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "spin" && section != "experiment" && section != "numerics" &&
          section != "sec" && section != "paths")
        fail(origin, line, "unknown section '[" + section + "]'");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(origin, line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(origin, line, "empty key");

    const auto unknown = [&]() {
      fail(origin, line, "unknown key '" + key + "' in section [" + section + "]");
    };
    if (section == "spin") {
      if (key == "g") cfg.spin.g = parse_double(value, key, origin, line);
      else if (key == "d_mhz") cfg.spin.d_mhz = parse_double(value, key, origin, line);
      else if (key == "d_strain_fwhm_mhz")
        cfg.spin.d_strain_fwhm_mhz = parse_double(value, key, origin, line);
      else if (key == "pop_plus") cfg.spin.pops.p_plus = parse_double(value, key, origin, line);
      else if (key == "pop_zero") cfg.spin.pops.p_zero = parse_double(value, key, origin, line);
      else if (key == "pop_minus") cfg.spin.pops.p_minus = parse_double(value, key, origin, line);
      else unknown();
    } else if (section == "experiment") {
      if (key == "mw_freq_ghz") cfg.experiment.mw_freq_ghz = parse_double(value, key, origin, line);
      else if (key == "field_z_mt")
        cfg.experiment.field_z_mt = parse_field_or_auto(value, key, origin, line);
      else if (key == "field_int_mt")
        cfg.experiment.field_int_mt = parse_field_or_auto(value, key, origin, line);
      else if (key == "field_xy_mt")
        cfg.experiment.field_xy_mt = parse_field_or_auto(value, key, origin, line);
      else if (key == "tau_us") cfg.experiment.tau_us = parse_double(value, key, origin, line);
      else if (key == "e_field_v_per_m")
        cfg.experiment.e_field_v_per_m = parse_double(value, key, origin, line);
      else if (key == "geometry") cfg.experiment.geometry = value;
      else if (key == "excitation_fwhm_mhz")
        cfg.experiment.excitation_fwhm_mhz = parse_double(value, key, origin, line);
      else if (key == "linewidth_fwhm_mhz")
        cfg.experiment.linewidth_fwhm_mhz = parse_double(value, key, origin, line);
      else if (key == "t2_us") cfg.experiment.t2_us = parse_double(value, key, origin, line);
      else if (key == "field_min_mt")
        cfg.experiment.field_min_mt = parse_double(value, key, origin, line);
      else if (key == "field_max_mt")
        cfg.experiment.field_max_mt = parse_double(value, key, origin, line);
      else unknown();
    } else if (section == "numerics") {
      if (key == "theta_points") cfg.numerics.theta_points = parse_int(value, key, origin, line);
      else if (key == "strain_nodes")
        cfg.numerics.strain_nodes = parse_int(value, key, origin, line);
      else if (key == "kappa_nodes") cfg.numerics.kappa_nodes = parse_int(value, key, origin, line);
      else if (key == "phi_points") cfg.numerics.phi_points = parse_int(value, key, origin, line);
      else if (key == "echo_points") cfg.numerics.echo_points = parse_int(value, key, origin, line);
      else if (key == "field_points")
        cfg.numerics.field_points = parse_int(value, key, origin, line);
      else if (key == "root_tol_mhz")
        cfg.numerics.root_tol_mhz = parse_double(value, key, origin, line);
      else unknown();
    } else if (section == "sec") {
      if (key == "kappa_hz_per_v_per_m")
        cfg.sec.kappa_hz_per_v_per_m = parse_double(value, key, origin, line);
      else if (key == "sigma_kappa_hz_per_v_per_m")
        cfg.sec.sigma_kappa_hz_per_v_per_m = parse_double(value, key, origin, line);
      else if (key == "delta_f_min_hz")
        cfg.delta_f_min_hz = parse_double(value, key, origin, line);
      else unknown();
    } else if (section == "paths") {
      if (key == "data_dir") cfg.paths.data_dir = value;
      else if (key == "out_dir") cfg.paths.out_dir = value;
      else unknown();
    } else {
      fail(origin, line, "key '" + key + "' outside any section");
    }
  }
  cfg.validate();
  return cfg;
}

run_config parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string serialize_config(const run_config& cfg) {
  std::ostringstream out;
  const auto num = [](double v) { return format_double(v); };
  const auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : "auto"; };
  out << "[spin]\n";
  out << "g = " << num(cfg.spin.g) << "\n";
  out << "d_mhz = " << num(cfg.spin.d_mhz) << "\n";
  out << "d_strain_fwhm_mhz = " << num(cfg.spin.d_strain_fwhm_mhz) << "\n";
  out << "pop_plus = " << num(cfg.spin.pops.p_plus) << "\n";
  out << "pop_zero = " << num(cfg.spin.pops.p_zero) << "\n";
  out << "pop_minus = " << num(cfg.spin.pops.p_minus) << "\n";
  out << "\n[experiment]\n";
  out << "mw_freq_ghz = " << num(cfg.experiment.mw_freq_ghz) << "\n";
  out << "field_z_mt = " << opt(cfg.experiment.field_z_mt) << "\n";
  out << "field_int_mt = " << opt(cfg.experiment.field_int_mt) << "\n";
  out << "field_xy_mt = " << opt(cfg.experiment.field_xy_mt) << "\n";
  out << "tau_us = " << num(cfg.experiment.tau_us) << "\n";
  out << "e_field_v_per_m = " << num(cfg.experiment.e_field_v_per_m) << "\n";
  out << "geometry = " << cfg.experiment.geometry << "\n";
  out << "excitation_fwhm_mhz = " << num(cfg.experiment.excitation_fwhm_mhz) << "\n";
  out << "linewidth_fwhm_mhz = " << num(cfg.experiment.linewidth_fwhm_mhz) << "\n";
  out << "t2_us = " << num(cfg.experiment.t2_us) << "\n";
  out << "field_min_mt = " << num(cfg.experiment.field_min_mt) << "\n";
  out << "field_max_mt = " << num(cfg.experiment.field_max_mt) << "\n";
  out << "\n[numerics]\n";
  out << "theta_points = " << cfg.numerics.theta_points << "\n";
  out << "strain_nodes = " << cfg.numerics.strain_nodes << "\n";
  out << "kappa_nodes = " << cfg.numerics.kappa_nodes << "\n";
  out << "phi_points = " << cfg.numerics.phi_points << "\n";
  out << "echo_points = " << cfg.numerics.echo_points << "\n";
  out << "field_points = " << cfg.numerics.field_points << "\n";
  out << "root_tol_mhz = " << num(cfg.numerics.root_tol_mhz) << "\n";
  out << "\n[sec]\n";
  out << "kappa_hz_per_v_per_m = " << num(cfg.sec.kappa_hz_per_v_per_m) << "\n";
  out << "sigma_kappa_hz_per_v_per_m = " << num(cfg.sec.sigma_kappa_hz_per_v_per_m) << "\n";
  out << "delta_f_min_hz = " << num(cfg.delta_f_min_hz) << "\n";
  out << "\n[paths]\n";
  out << "data_dir = " << cfg.paths.data_dir << "\n";
  out << "out_dir = " << cfg.paths.out_dir << "\n";
  return out.str();
}

bool operator==(const run_config& a, const run_config& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace secsim
