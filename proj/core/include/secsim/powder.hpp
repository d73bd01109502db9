#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "secsim/spin.hpp"

namespace secsim {

// Transition-pair identity used throughout the powder layer:
//   0 -> eigenlevels (0,1), 1 -> (1,2), 2 -> (0,2), ascending energy order.
inline constexpr int n_transition_pairs = 3;
std::array<int, 2> transition_pair(int pair_id);

// Uniform theta grid over [0, pi], endpoint included. n >= 2.
std::vector<double> theta_grid(int n);

struct resonance_root {
  double field_mt;
  int pair_id;
  int polarity;       // +1 absorptive, -1 emissive (sign of line amplitude)
  double amplitude;   // signed amplitude of the line at the root
};

struct scan_window {
  double b_min_mt = 320.0;
  double b_max_mt = 375.0;
  double scan_step_mt = 0.25;   // bracketing resolution of the grid scan
  double root_tol_mhz = 1e-3;   // |nu_tr - nu_mw| at accepted roots
};

// Fields in the window where a transition frequency equals mw_freq_mhz,
// found by grid scan + bisection per transition pair. Lines below the
// intensity threshold at the root are discarded. Empty result when nothing
// crosses the window (not an error).
std::vector<resonance_root> resonance_fields(const spin_system& sys, double mw_freq_mhz,
                                             double theta_rad, const scan_window& window = {},
                                             double min_intensity = 1e-6);

// Resonance-field curve of one transition pair versus theta. Samples exist
// only where the pair has a root in the window; a pair may contribute
// several curve points per theta (all roots are kept).
struct resonance_branch {
  int pair_id;
  std::vector<double> theta_rad;
  std::vector<double> field_mt;
  std::vector<int> polarity;
};

std::vector<resonance_branch> angular_resonance_map(const spin_system& sys, double mw_freq_mhz,
                                                    const std::vector<double>& thetas,
                                                    const scan_window& window = {});

struct field_spectrum {
  std::vector<double> field_mt;   // strictly increasing grid
  std::vector<double> intensity;  // signed; positive = absorptive
};

// Echo-detected field sweep: powder integral (sin(theta) weight) with
// Gaussian D-strain quadrature; every resonance root deposits its signed
// amplitude as a Gaussian in field whose width is linewidth_fwhm_mhz mapped
// through the local frequency-to-field slope of its branch.
field_spectrum edfs_spectrum(const spin_system& sys, double mw_freq_mhz,
                             const std::vector<double>& field_grid_mt,
                             double linewidth_fwhm_mhz, int theta_points = 721,
                             int strain_nodes = 21, double root_tol_mhz = 1e-3);

// Weight over the molecular polar angle of the sub-ensemble excited at a
// given static field:
//   w(theta) ~ sin(theta) * sum_pairs int dD' Gauss(D') *
//              Gauss_exc(nu_tr(theta, D') - nu_mw) * |amplitude|.
// Stored per transition pair; `total()` sums pairs. Normalized to unit area
// over [0, pi] unless nothing is resonant, in which case `resonant` is false
// and all weights are zero.
struct orientation_distribution {
  std::vector<double> theta;                                   // radians, [0, pi]
  std::array<std::vector<double>, n_transition_pairs> branch;  // per-pair weights
  bool resonant = false;
  std::string normalization = "unit-area";

  std::vector<double> total() const;
  double peak_theta() const;  // argmax of the summed weight
};

orientation_distribution compute_orientation_distribution(const spin_system& sys,
                                                           double mw_freq_mhz, double b0_mt,
                                                           double excitation_fwhm_mhz,
                                                           int theta_points = 721,
                                                           int strain_nodes = 21);

// Pointwise E*cos(theta)*P(theta) over the distribution grid, V/m. The
// parallel-geometry projection; the azimuthal average handles the
// perpendicular case elsewhere.
std::vector<double> effective_field_profile(const orientation_distribution& dist,
                                            double e_v_per_m);

// Measurement field positions. "auto" resolution picks turning points of the
// resonance geometry: Z is the lowest theta=0 root, XY the highest
// theta=pi/2 root (both stable under D -> -D), Int the midpoint of the two.
struct field_positions {
  double z_mt;
  double int_mt;
  double xy_mt;
};

double auto_field_z(const spin_system& sys, double mw_freq_mhz, const scan_window& window = {});
double auto_field_xy(const spin_system& sys, double mw_freq_mhz, const scan_window& window = {});

field_positions resolve_field_positions(const spin_system& sys, double mw_freq_mhz,
                                        std::optional<double> z_override,
                                        std::optional<double> int_override,
                                        std::optional<double> xy_override,
                                        const scan_window& window = {});

}  // namespace secsim
