#pragma once

#include <Eigen/Dense>
#include <vector>

namespace secsim {

using matrix3c = Eigen::Matrix3cd;
using vector3d = Eigen::Vector3d;

// S=1 spin operators in the molecular-frame |m_s = +1, 0, -1> basis.
matrix3c spin_x();
matrix3c spin_y();
matrix3c spin_z();

// Zero-field sublevel populations in the |m_s = +1, 0, -1> basis order.
struct zero_field_populations {
  double p_plus = 0.025;
  double p_zero = 0.95;
  double p_minus = 0.025;

  // Each fraction in [0,1], sum 1 within 1e-12. Throws config_error.
  void validate() const;
};

// S=1 system with uniaxial anisotropy D (MHz, signed) and Gaussian D spread.
struct spin_system {
  double g = 2.0;
  double d_mhz = 317.0;
  double d_strain_fwhm_mhz = 150.0;
  zero_field_populations pops;

  double d_strain_sigma_mhz() const;
  void validate() const;  // g > 0, strain >= 0, populations valid
};

// H/h = D*Sz^2 + nu_B*(sin(theta)*Sx + cos(theta)*Sz), MHz, with
// nu_B = g*(mu_B/h)*B0. Axial: the azimuth never enters.
matrix3c build_hamiltonian(const spin_system& sys, double b0_mt, double theta_rad);
matrix3c build_hamiltonian(double d_mhz, double g, double b0_mt, double theta_rad);

// Ascending eigenvalues (MHz) with matching orthonormal eigenvector columns.
struct eigen_system {
  vector3d energies_mhz;
  matrix3c states;
};

// Rejects non-Hermitian input (> 1e-10 MHz asymmetry) with config_error.
eigen_system eigenlevels(const matrix3c& h);

// Closed-form levels for theta exactly 0 or pi/2, sorted ascending:
//   theta=0:    {D - nuB, 0, D + nuB}
//   theta=pi/2: {D/2 - R, D, D/2 + R},  R = sqrt(D^2/4 + nuB^2)
// Other angles rejected with config_error.
vector3d analytic_levels_axial(double d_mhz, double nu_b_mhz, double theta_rad);

// Sudden projection of the zero-field |m_s> populations onto the field
// eigenstates: pop_i = sum_m p_m |<i|m>|^2. Output sums to 1.
vector3d project_populations(const zero_field_populations& pops, const matrix3c& states);

struct transition_line {
  int lower_index;             // eigenlevel indices, ascending energy order
  int upper_index;
  double frequency_mhz;        // E_upper - E_lower, > 0 for kept lines
  double matrix_element_sq;    // dimensionless, in [0, 1]
  double amplitude;            // (pop_lower - pop_upper) * matrix_element_sq;
                               // positive = absorptive, negative = emissive
};

// Allowed transitions at one orientation. The driving-field intensity is the
// microwave-azimuth average 1/2*(|<j|Sx_lab|i>|^2 + |<j|Sy|i>|^2) with
// Sx_lab = cos(theta)*Sx - sin(theta)*Sz the molecular-frame image of a lab
// axis perpendicular to B0. Lines with matrix_element_sq < min_intensity are
// dropped.
std::vector<transition_line> transition_lines(const spin_system& sys, double b0_mt,
                                              double theta_rad,
                                              double min_intensity = 1e-6);

// Same, reusing an existing diagonalization and its projected populations.
std::vector<transition_line> transition_lines(const eigen_system& es, const vector3d& pops,
                                              double theta_rad,
                                              double min_intensity = 1e-6);

}  // namespace secsim
