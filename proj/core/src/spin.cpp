#include "secsim/spin.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "secsim/constants.hpp"
#include "secsim/errors.hpp"

namespace secsim {

namespace {
constexpr std::complex<double> I{0.0, 1.0};
}

matrix3c spin_x() {
  const double r = 1.0 / std::sqrt(2.0);
  matrix3c m;
  m << 0, r, 0,
       r, 0, r,
       0, r, 0;
  return m;
}

matrix3c spin_y() {
  const double r = 1.0 / std::sqrt(2.0);
  matrix3c m;
  m <<  0,     -I * r,  0,
        I * r,  0,     -I * r,
        0,      I * r,  0;
  return m;
}

matrix3c spin_z() {
  matrix3c m = matrix3c::Zero();
  m(0, 0) = 1.0;
  m(2, 2) = -1.0;
  return m;
}

void zero_field_populations::validate() const {
  const double fractions[3] = {p_plus, p_zero, p_minus};
  const char* names[3] = {"pop_plus", "pop_zero", "pop_minus"};
  for (int i = 0; i < 3; ++i) {
    if (!(fractions[i] >= 0.0 && fractions[i] <= 1.0))
      throw config_error(std::string(names[i]) + " must lie in [0, 1]");
  }
  const double sum = p_plus + p_zero + p_minus;
  if (std::abs(sum - 1.0) > 1e-12)
    throw config_error("zero-field populations must sum to 1 (got " + std::to_string(sum) + ")");
}

double spin_system::d_strain_sigma_mhz() const { return d_strain_fwhm_mhz * fwhm_to_sigma; }

void spin_system::validate() const {
  if (!(g > 0.0)) throw config_error("g must be positive");
  if (d_strain_fwhm_mhz < 0.0) throw config_error("d_strain_fwhm_mhz must be >= 0");
  pops.validate();
}

matrix3c build_hamiltonian(double d_mhz, double g, double b0_mt, double theta_rad) {
  if (b0_mt < 0.0) throw config_error("magnetic field must be >= 0");
  const double nu_b = zeeman_mhz(g, b0_mt);
  const double st = std::sin(theta_rad);
  const double ct = std::cos(theta_rad);
  const matrix3c sz = spin_z();
  return d_mhz * (sz * sz) + nu_b * (st * spin_x() + ct * sz);
}

matrix3c build_hamiltonian(const spin_system& sys, double b0_mt, double theta_rad) {
  return build_hamiltonian(sys.d_mhz, sys.g, b0_mt, theta_rad);
}

eigen_system eigenlevels(const matrix3c& h) {
  if ((h - matrix3c(h.adjoint())).cwiseAbs().maxCoeff() > 1e-10)
    throw config_error("eigenlevels: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<matrix3c> solver(h);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

vector3d analytic_levels_axial(double d_mhz, double nu_b_mhz, double theta_rad) {
  vector3d levels;
  if (theta_rad == 0.0) {
    levels << d_mhz - nu_b_mhz, 0.0, d_mhz + nu_b_mhz;
  } else if (theta_rad == pi / 2.0) {
    const double r = std::sqrt(d_mhz * d_mhz / 4.0 + nu_b_mhz * nu_b_mhz);
    levels << d_mhz / 2.0 - r, d_mhz, d_mhz / 2.0 + r;
  } else {
    throw config_error("analytic_levels_axial: closed forms exist only at theta = 0 or pi/2");
  }
  std::sort(levels.data(), levels.data() + 3);
  return levels;
}

vector3d project_populations(const zero_field_populations& pops, const matrix3c& states) {
  const double p[3] = {pops.p_plus, pops.p_zero, pops.p_minus};
  vector3d out = vector3d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 3; ++m) out(i) += p[m] * std::norm(states(m, i));
  return out;
}

std::vector<transition_line> transition_lines(const eigen_system& es, const vector3d& pops,
                                              double theta_rad, double min_intensity) {
  const double st = std::sin(theta_rad);
  const double ct = std::cos(theta_rad);
  // Lab axes perpendicular to B0, expressed in the molecular frame; Sy is
  // already perpendicular, the second axis tilts with theta.
  const matrix3c sx_lab = ct * spin_x() - st * spin_z();
  const matrix3c sy_lab = spin_y();

  std::vector<transition_line> lines;
  static constexpr int pair_low[3] = {0, 1, 0};
  static constexpr int pair_up[3] = {1, 2, 2};
  for (int p = 0; p < 3; ++p) {
    const int i = pair_low[p];
    const int j = pair_up[p];
    const double freq = es.energies_mhz(j) - es.energies_mhz(i);
    if (freq <= 0.0) continue;  // degenerate pair carries no spectral line
    const std::complex<double> mx = es.states.col(j).adjoint() * sx_lab * es.states.col(i);
    const std::complex<double> my = es.states.col(j).adjoint() * sy_lab * es.states.col(i);
    const double me_sq = 0.5 * (std::norm(mx) + std::norm(my));
    if (me_sq < min_intensity) continue;
    lines.push_back({i, j, freq, me_sq, (pops(i) - pops(j)) * me_sq});
  }
  return lines;
}

std::vector<transition_line> transition_lines(const spin_system& sys, double b0_mt,
                                              double theta_rad, double min_intensity) {
  const eigen_system es = eigenlevels(build_hamiltonian(sys, b0_mt, theta_rad));
  const vector3d pops = project_populations(sys.pops, es.states);
  return transition_lines(es, pops, theta_rad, min_intensity);
}

}  // namespace secsim
