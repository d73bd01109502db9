#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "secsim/powder.hpp"
#include "secsim/spin.hpp"

namespace secsim {

enum class field_geometry { parallel, perpendicular };

std::string to_string(field_geometry g);
field_geometry geometry_from_string(const std::string& s);

// Linear electric-field coupling of the anisotropy parameter.
struct sec_params {
  double kappa_hz_per_v_per_m = 0.59;
  double sigma_kappa_hz_per_v_per_m = 0.15;

  void validate() const;  // sigma >= 0
};

// delta_D = kappa * E * cos_angle, returned in MHz.
double delta_d_mhz(double e_v_per_m, double cos_angle, double kappa_hz_per_v_per_m);

// Projection of the E field onto the molecular dipole axis:
// parallel geometry -> cos(theta); perpendicular -> sin(theta)*cos(phi).
double cos_angle_to_dipole(double theta_rad, double phi_rad, field_geometry geometry);

// Per-pair transition-frequency change when D shifts by dd_mhz, from two full
// diagonalizations with level pairing tracked by eigenvector overlap.
// dd_large is set when |dd| exceeds 10% of |D| (the shift is then outside
// the regime the linear coupling law describes). Pairing ambiguity
// (overlap < 0.7) raises numeric_error.
struct delta_f_result {
  std::array<double, n_transition_pairs> shift_mhz;
  double min_overlap;
  bool dd_large;
};

delta_f_result delta_f(const spin_system& sys, double b0_mt, double theta_rad, double dd_mhz);

// First-order response of each transition frequency to a change in D:
// d(nu_pair)/dD = <upper|Sz^2|upper> - <lower|Sz^2|lower>.
std::array<double, n_transition_pairs> transition_shift_slopes(const eigen_system& es);

struct echo_curve {
  std::vector<double> t_e_us;
  std::vector<double> in_phase;    // normalized, in_phase(0) = 1
  std::vector<double> quadrature;

  std::string position_label;
  field_geometry geometry = field_geometry::parallel;
  double b0_mt = 0.0;
  double e_v_per_m = 0.0;
  double tau_us = 0.0;
  double kappa_hz_per_v_per_m = 0.0;
  double sigma_kappa_hz_per_v_per_m = 0.0;
  double absolute_scale = 1.0;     // exp(-2 tau / T2) when T2 is configured
};

struct echo_numerics {
  int kappa_nodes = 15;   // Gauss-Hermite nodes over the kappa spread
  int phi_points = 72;    // uniform azimuth grid, perpendicular geometry only
  double t2_us = 0.0;     // 0 disables the overall decay factor
};

// Phase-accumulation synthesis of the two-pulse echo under a pulsed E field:
//   S(t_E) = sum_theta [sum_phi] sum_pairs sum_kappa' w * exp(i 2 pi df t_eff)
// with t_eff = t_E below tau and 2 tau - t_E above (the refocusing pulse
// inverts previously acquired phase), df = slope * delta_D(kappa', E, angle).
// Normalized so S(0) = 1; in_phase/quadrature are the real/imaginary parts.
// Throws data_error when the distribution has no resonant population.
echo_curve echo_modulation(const spin_system& sys, const sec_params& sec,
                           const orientation_distribution& dist, double e_v_per_m,
                           double tau_us, const std::vector<double>& t_e_us,
                           field_geometry geometry, double b0_mt,
                           const echo_numerics& numerics = {});

// max |quadrature| over the curve. Contract: <= 1e-6 for distributions
// symmetric under theta -> pi - theta (nonzero values diagnose asymmetry).
double quadrature_residual(const echo_curve& curve);

// Precomputed phase terms for one (distribution, geometry, E, B0) context;
// evaluating at new (kappa, sigma_kappa) is then cheap. This is what makes
// repeated objective evaluations affordable during fitting.
class echo_synthesizer {
 public:
  echo_synthesizer(const spin_system& sys, const orientation_distribution& dist,
                   double e_v_per_m, field_geometry geometry, double b0_mt,
                   const echo_numerics& numerics = {});

  bool empty() const { return weights_.empty(); }

  // Complex S(t_E)/S(0) on the given grid.
  std::vector<std::complex<double>> evaluate(const sec_params& sec, double tau_us,
                                             const std::vector<double>& t_e_us) const;

 private:
  std::vector<double> weights_;     // non-negative, sums to total weight
  std::vector<double> phase_base_;  // MHz of frequency shift per unit kappa
  std::vector<double> gh_nodes_;    // kappa' = kappa + sigma * node
  std::vector<double> gh_weights_;
};

}  // namespace secsim
