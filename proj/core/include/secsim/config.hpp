#pragma once

#include <optional>
#include <string>

#include "secsim/sec.hpp"
#include "secsim/spin.hpp"

namespace secsim {

// Full run configuration, mirroring the INI-style config file. Field
// positions are std::optional: nullopt means "auto" (resolved from the
// simulated resonance geometry at run time).
struct run_config {
  spin_system spin;

  struct experiment_block {
    double mw_freq_ghz = 9.7;
    std::optional<double> field_z_mt;            // default auto
    std::optional<double> field_int_mt = 340.0;  // default fixed
    std::optional<double> field_xy_mt;           // default auto
    double tau_us = 2.0;
    double e_field_v_per_m = 1.5e6;
    std::string geometry = "both";               // par | perp | both
    double excitation_fwhm_mhz = 30.0;
    double linewidth_fwhm_mhz = 5.0;
    double t2_us = 0.0;                          // 0 = no decay factor
    double field_min_mt = 320.0;
    double field_max_mt = 375.0;
  } experiment;

  struct numerics_block {
    int theta_points = 721;
    int strain_nodes = 21;
    int kappa_nodes = 15;
    int phi_points = 72;
    int echo_points = 81;
    int field_points = 1101;
    double root_tol_mhz = 1e-3;
  } numerics;

  sec_params sec;
  double delta_f_min_hz = 62000.0;

  struct paths_block {
    std::string data_dir;
    std::string out_dir = ".";
  } paths;

  double mw_freq_mhz() const { return 1000.0 * experiment.mw_freq_ghz; }
  void validate() const;  // throws config_error naming the offending key
};

// Parse an INI-style config file. Unknown sections/keys are rejected by
// name; syntax and value errors carry the line number. An empty file yields
// the full default configuration. Missing file throws config_error.
run_config parse_config(const std::string& path);
run_config parse_config_text(const std::string& text, const std::string& origin = "<string>");

// Serialization writes every key explicitly ("auto" for unresolved
// positions); parse(serialize(c)) == c.
std::string serialize_config(const run_config& config);

bool operator==(const run_config& a, const run_config& b);

}  // namespace secsim
