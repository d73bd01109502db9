#include "secsim/powder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "secsim/constants.hpp"
#include "secsim/errors.hpp"
#include "secsim/quadrature.hpp"

namespace secsim {

namespace {

constexpr int pair_low[n_transition_pairs] = {0, 1, 0};
constexpr int pair_up[n_transition_pairs] = {1, 2, 2};

double gauss_pdf(double x, double sigma) {
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(two_pi));
}

// Frequency of one eigenlevel pair at a given field. Eigenvalues are
// continuous in B, so pair identity by sort order is stable along a scan.
double pair_frequency(const spin_system& sys, double b0_mt, double theta_rad, int pair_id) {
  const eigen_system es = eigenlevels(build_hamiltonian(sys, b0_mt, theta_rad));
  return es.energies_mhz(pair_up[pair_id]) - es.energies_mhz(pair_low[pair_id]);
}

// Trapezoid weights of a uniform grid.
std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
  const std::size_t n = grid.size();
  const double step = grid[1] - grid[0];
  std::vector<double> w(n, step);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

double trapezoid_integral(const std::vector<double>& grid, const std::vector<double>& values) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    sum += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
  return sum;
}

}  // namespace

std::array<int, 2> transition_pair(int pair_id) {
  return {pair_low[pair_id], pair_up[pair_id]};
}

std::vector<double> theta_grid(int n) {
  if (n < 2) throw config_error("theta_grid: need at least 2 points");
  std::vector<double> grid(n);
  const double step = pi / (n - 1);
  for (int i = 0; i < n; ++i) grid[i] = i * step;
  return grid;
}

std::vector<resonance_root> resonance_fields(const spin_system& sys, double mw_freq_mhz,
                                             double theta_rad, const scan_window& window,
                                             double min_intensity) {
  if (mw_freq_mhz <= 0.0) throw config_error("microwave frequency must be positive");
  std::vector<resonance_root> roots;
  const int n_scan =
      std::max(2, static_cast<int>(std::ceil((window.b_max_mt - window.b_min_mt) /
                                             window.scan_step_mt)) + 1);
  const double step = (window.b_max_mt - window.b_min_mt) / (n_scan - 1);

  for (int pair_id = 0; pair_id < n_transition_pairs; ++pair_id) {
    double prev_b = window.b_min_mt;
    double prev_f = pair_frequency(sys, prev_b, theta_rad, pair_id) - mw_freq_mhz;
    for (int k = 1; k < n_scan; ++k) {
      const double b = window.b_min_mt + k * step;
      const double f = pair_frequency(sys, b, theta_rad, pair_id) - mw_freq_mhz;
      if ((prev_f <= 0.0 && f > 0.0) || (prev_f >= 0.0 && f < 0.0) || prev_f == 0.0) {
        double lo = prev_b, hi = b, f_lo = prev_f;
        double mid = lo, f_mid = f_lo;
        for (int it = 0; it < 200; ++it) {
          mid = 0.5 * (lo + hi);
          f_mid = pair_frequency(sys, mid, theta_rad, pair_id) - mw_freq_mhz;
          if (std::abs(f_mid) < window.root_tol_mhz || hi - lo < 1e-9) break;
          if ((f_lo <= 0.0) == (f_mid <= 0.0)) {
            lo = mid;
            f_lo = f_mid;
          } else {
            hi = mid;
          }
        }
        const eigen_system es = eigenlevels(build_hamiltonian(sys, mid, theta_rad));
        const vector3d pops = project_populations(sys.pops, es.states);
        for (const auto& line : transition_lines(es, pops, theta_rad, min_intensity)) {
          if (line.lower_index == pair_low[pair_id] && line.upper_index == pair_up[pair_id]) {
            roots.push_back({mid, pair_id, line.amplitude >= 0.0 ? +1 : -1, line.amplitude});
          }
        }
      }
      prev_b = b;
      prev_f = f;
    }
  }
  std::sort(roots.begin(), roots.end(),
            [](const resonance_root& a, const resonance_root& b) { return a.field_mt < b.field_mt; });
  return roots;
}

std::vector<resonance_branch> angular_resonance_map(const spin_system& sys, double mw_freq_mhz,
                                                    const std::vector<double>& thetas,
                                                    const scan_window& window) {
  std::vector<resonance_branch> branches(n_transition_pairs);
  for (int p = 0; p < n_transition_pairs; ++p) branches[p].pair_id = p;
  for (const double th : thetas) {
    for (const auto& root : resonance_fields(sys, mw_freq_mhz, th, window)) {
      auto& br = branches[root.pair_id];
      br.theta_rad.push_back(th);
      br.field_mt.push_back(root.field_mt);
      br.polarity.push_back(root.polarity);
    }
  }
  branches.erase(std::remove_if(branches.begin(), branches.end(),
                                [](const resonance_branch& b) { return b.field_mt.empty(); }),
                 branches.end());
  return branches;
}

field_spectrum edfs_spectrum(const spin_system& sys, double mw_freq_mhz,
                             const std::vector<double>& field_grid_mt,
                             double linewidth_fwhm_mhz, int theta_points, int strain_nodes,
                             double root_tol_mhz) {
  if (linewidth_fwhm_mhz <= 0.0) throw config_error("linewidth_fwhm_mhz must be positive");
  if (field_grid_mt.size() < 2) throw config_error("field grid needs at least 2 points");
  sys.validate();

  field_spectrum spec;
  spec.field_mt = field_grid_mt;
  spec.intensity.assign(field_grid_mt.size(), 0.0);

  const std::vector<double> thetas = theta_grid(theta_points);
  const std::vector<double> theta_w = trapezoid_weights(thetas);
  const gaussian_rule strain_rule = gauss_hermite(strain_nodes);
  const double sigma_d = sys.d_strain_sigma_mhz();
  const double sigma_b_base = linewidth_fwhm_mhz * fwhm_to_sigma;

  scan_window window;
  window.b_min_mt = field_grid_mt.front() - 5.0 * sigma_b_base;
  window.b_max_mt = field_grid_mt.back() + 5.0 * sigma_b_base;
  window.root_tol_mhz = root_tol_mhz;

  const matrix3c sx = spin_x();
  const matrix3c sz = spin_z();

  // The spectrum is symmetric under theta -> pi - theta; integrate half the
  // sphere and double everything except the equator point.
  const int mid = (theta_points - 1) / 2;
  for (int i = 0; i <= mid; ++i) {
    const double th = thetas[i];
    const double fold = (i < mid || theta_points % 2 == 0) ? 2.0 : 1.0;
    const double w_theta = fold * theta_w[i] * std::sin(th);
    if (w_theta == 0.0) continue;
    const double st = std::sin(th);
    const double ct = std::cos(th);
    for (int q = 0; q < strain_nodes; ++q) {
      spin_system local = sys;
      local.d_mhz = sys.d_mhz + sigma_d * strain_rule.nodes[q];
      const double w = w_theta * strain_rule.weights[q];
      for (const auto& root : resonance_fields(local, mw_freq_mhz, th, window)) {
        // Local frequency-to-field slope via first-order Zeeman response.
        const eigen_system es = eigenlevels(build_hamiltonian(local, root.field_mt, th));
        const matrix3c h_zeeman = st * sx + ct * sz;
        const auto pair = transition_pair(root.pair_id);
        const double d_up =
            (es.states.col(pair[1]).adjoint() * h_zeeman * es.states.col(pair[1]))(0).real();
        const double d_lo =
            (es.states.col(pair[0]).adjoint() * h_zeeman * es.states.col(pair[0]))(0).real();
        const double slope = std::abs((d_up - d_lo) * sys.g * mu_b_over_h_mhz_per_mt);
        if (slope < 1e-12) continue;
        const double sigma_b = sigma_b_base / slope;
        const auto lo_it = std::lower_bound(field_grid_mt.begin(), field_grid_mt.end(),
                                            root.field_mt - 6.0 * sigma_b);
        const auto hi_it = std::upper_bound(field_grid_mt.begin(), field_grid_mt.end(),
                                            root.field_mt + 6.0 * sigma_b);
        for (auto it = lo_it; it != hi_it; ++it)
          spec.intensity[static_cast<std::size_t>(it - field_grid_mt.begin())] +=
              w * root.amplitude * gauss_pdf(*it - root.field_mt, sigma_b);
      }
    }
  }
  return spec;
}

orientation_distribution compute_orientation_distribution(const spin_system& sys,
                                                           double mw_freq_mhz, double b0_mt,
                                                           double excitation_fwhm_mhz,
                                                           int theta_points, int strain_nodes) {
  if (excitation_fwhm_mhz <= 0.0) throw config_error("excitation_fwhm_mhz must be positive");
  sys.validate();

  orientation_distribution dist;
  dist.theta = theta_grid(theta_points);
  for (auto& br : dist.branch) br.assign(theta_points, 0.0);

  const gaussian_rule strain_rule = gauss_hermite(strain_nodes);
  const double sigma_d = sys.d_strain_sigma_mhz();
  const double sigma_exc = excitation_fwhm_mhz * fwhm_to_sigma;

  // Fill [0, pi/2] and mirror: the axial spectrum is exactly symmetric under
  // theta -> pi - theta, and bitwise-equal mirrored weights let downstream
  // phase sums cancel their imaginary parts.
  const int mid = (theta_points - 1) / 2;
  for (int i = 0; i <= mid; ++i) {
    const double th = dist.theta[i];
    const double st = std::sin(th);
    if (st == 0.0) continue;  // sin(theta) weight zeroes the pole exactly
    double acc[n_transition_pairs] = {0.0, 0.0, 0.0};
    for (int q = 0; q < strain_nodes; ++q) {
      spin_system local = sys;
      local.d_mhz = sys.d_mhz + sigma_d * strain_rule.nodes[q];
      const eigen_system es = eigenlevels(build_hamiltonian(local, b0_mt, th));
      const vector3d pops = project_populations(sys.pops, es.states);
      for (const auto& line : transition_lines(es, pops, th)) {
        for (int p = 0; p < n_transition_pairs; ++p) {
          if (line.lower_index == pair_low[p] && line.upper_index == pair_up[p]) {
            acc[p] += strain_rule.weights[q] * std::abs(line.amplitude) *
                      gauss_pdf(line.frequency_mhz - mw_freq_mhz, sigma_exc);
          }
        }
      }
    }
    for (int p = 0; p < n_transition_pairs; ++p) {
      const double w = st * acc[p];
      dist.branch[p][i] = w;
      dist.branch[p][theta_points - 1 - i] = w;
    }
  }

  const std::vector<double> total = [&] {
    std::vector<double> t(theta_points, 0.0);
    for (const auto& br : dist.branch)
      for (int i = 0; i < theta_points; ++i) t[i] += br[i];
    return t;
  }();
  const double area = trapezoid_integral(dist.theta, total);
  if (area < 1e-100) {
    dist.resonant = false;
    for (auto& br : dist.branch) std::fill(br.begin(), br.end(), 0.0);
    return dist;
  }
  dist.resonant = true;
  for (auto& br : dist.branch)
    for (double& w : br) w /= area;
  return dist;
}

std::vector<double> orientation_distribution::total() const {
  std::vector<double> t(theta.size(), 0.0);
  for (const auto& br : branch)
    for (std::size_t i = 0; i < theta.size(); ++i) t[i] += br[i];
  return t;
}

double orientation_distribution::peak_theta() const {
  const std::vector<double> t = total();
  const auto it = std::max_element(t.begin(), t.end());
  return theta[static_cast<std::size_t>(it - t.begin())];
}

std::vector<double> effective_field_profile(const orientation_distribution& dist,
                                            double e_v_per_m) {
  if (e_v_per_m < 0.0) throw config_error("E-field magnitude must be >= 0");
  const std::vector<double> total = dist.total();
  std::vector<double> profile(total.size());
  for (std::size_t i = 0; i < total.size(); ++i)
    profile[i] = e_v_per_m * std::cos(dist.theta[i]) * total[i];
  return profile;
}

double auto_field_z(const spin_system& sys, double mw_freq_mhz, const scan_window& window) {
  const auto roots = resonance_fields(sys, mw_freq_mhz, 0.0, window);
  if (roots.empty()) throw data_error("no resonance at theta=0 inside the scan window");
  return roots.front().field_mt;
}

double auto_field_xy(const spin_system& sys, double mw_freq_mhz, const scan_window& window) {
  const auto roots = resonance_fields(sys, mw_freq_mhz, pi / 2.0, window);
  if (roots.empty()) throw data_error("no resonance at theta=pi/2 inside the scan window");
  return roots.back().field_mt;
}

field_positions resolve_field_positions(const spin_system& sys, double mw_freq_mhz,
                                        std::optional<double> z_override,
                                        std::optional<double> int_override,
                                        std::optional<double> xy_override,
                                        const scan_window& window) {
  field_positions pos{};
  pos.z_mt = z_override ? *z_override : auto_field_z(sys, mw_freq_mhz, window);
  pos.xy_mt = xy_override ? *xy_override : auto_field_xy(sys, mw_freq_mhz, window);
  pos.int_mt = int_override ? *int_override : 0.5 * (pos.z_mt + pos.xy_mt);
  return pos;
}

}  // namespace secsim
