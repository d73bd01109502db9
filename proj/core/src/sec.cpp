#include "secsim/sec.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "secsim/constants.hpp"
#include "secsim/errors.hpp"
#include "secsim/quadrature.hpp"

namespace secsim {

std::string to_string(field_geometry g) {
  return g == field_geometry::parallel ? "parallel" : "perpendicular";
}

field_geometry geometry_from_string(const std::string& s) {
  if (s == "par" || s == "parallel") return field_geometry::parallel;
  if (s == "perp" || s == "perpendicular") return field_geometry::perpendicular;
  throw config_error("unknown geometry '" + s + "' (expected par|perp)");
}

void sec_params::validate() const {
  if (sigma_kappa_hz_per_v_per_m < 0.0)
    throw config_error("sigma_kappa_hz_per_v_per_m must be >= 0");
}

double delta_d_mhz(double e_v_per_m, double cos_angle, double kappa_hz_per_v_per_m) {
  if (std::abs(cos_angle) > 1.0 + 1e-12)
    throw config_error("cos_angle must lie in [-1, 1]");
  return kappa_hz_per_v_per_m * e_v_per_m * cos_angle * 1e-6;
}

double cos_angle_to_dipole(double theta_rad, double phi_rad, field_geometry geometry) {
  return geometry == field_geometry::parallel ? std::cos(theta_rad)
                                              : std::sin(theta_rad) * std::cos(phi_rad);
}

std::array<double, n_transition_pairs> transition_shift_slopes(const eigen_system& es) {
  // d<E_k>/dD = <k|Sz^2|k>; rows 0 and 2 are the m_s = +/-1 components.
  double sz2[3];
  for (int k = 0; k < 3; ++k)
    sz2[k] = std::norm(es.states(0, k)) + std::norm(es.states(2, k));
  return {sz2[1] - sz2[0], sz2[2] - sz2[1], sz2[2] - sz2[0]};
}

delta_f_result delta_f(const spin_system& sys, double b0_mt, double theta_rad, double dd_mhz) {
  const eigen_system base = eigenlevels(build_hamiltonian(sys, b0_mt, theta_rad));
  spin_system shifted_sys = sys;
  shifted_sys.d_mhz += dd_mhz;
  const eigen_system shifted = eigenlevels(build_hamiltonian(shifted_sys, b0_mt, theta_rad));

  // Pair perturbed levels to unperturbed ones by eigenvector overlap, not by
  // energy order; on near-crossings the order can swap while the states do not.
  int match[3];
  bool taken[3] = {false, false, false};
  double min_overlap = 1.0;
  for (int b = 0; b < 3; ++b) {
    int best = -1;
    double best_ov = -1.0;
    for (int a = 0; a < 3; ++a) {
      if (taken[a]) continue;
      const double ov = std::abs((shifted.states.col(a).adjoint() * base.states.col(b))(0));
      if (ov > best_ov) {
        best_ov = ov;
        best = a;
      }
    }
    match[b] = best;
    taken[best] = true;
    min_overlap = std::min(min_overlap, best_ov);
  }
  if (min_overlap < 0.7)
    throw numeric_error("delta_f: level pairing ambiguous (overlap " +
                        std::to_string(min_overlap) + " < 0.7)");

  delta_f_result result{};
  result.min_overlap = min_overlap;
  result.dd_large = std::abs(dd_mhz) > 0.1 * std::abs(sys.d_mhz);
  for (int p = 0; p < n_transition_pairs; ++p) {
    const auto pair = transition_pair(p);
    const double nu0 = base.energies_mhz(pair[1]) - base.energies_mhz(pair[0]);
    const double nu1 = shifted.energies_mhz(match[pair[1]]) - shifted.energies_mhz(match[pair[0]]);
    result.shift_mhz[p] = nu1 - nu0;
  }
  return result;
}

echo_synthesizer::echo_synthesizer(const spin_system& sys, const orientation_distribution& dist,
                                   double e_v_per_m, field_geometry geometry, double b0_mt,
                                   const echo_numerics& numerics) {
  const int n = static_cast<int>(dist.theta.size());
  if (n < 2 || !dist.resonant) return;

  const gaussian_rule rule = gauss_hermite(numerics.kappa_nodes);
  gh_nodes_ = rule.nodes;
  gh_weights_ = rule.weights;

  // cos/sin tables mirrored with explicit sign so theta and pi-theta terms
  // are exact conjugate partners; slopes are mirror-symmetric and reused.
  const int mid = (n - 1) / 2;
  std::vector<double> cos_t(n), sin_t(n);
  std::vector<std::array<double, n_transition_pairs>> slopes(n);
  for (int i = 0; i <= mid; ++i) {
    cos_t[i] = std::cos(dist.theta[i]);
    sin_t[i] = std::sin(dist.theta[i]);
    cos_t[n - 1 - i] = -cos_t[i];
    sin_t[n - 1 - i] = sin_t[i];
    const eigen_system es = eigenlevels(build_hamiltonian(sys, b0_mt, dist.theta[i]));
    slopes[i] = transition_shift_slopes(es);
    slopes[n - 1 - i] = slopes[i];
  }

  const double step = dist.theta[1] - dist.theta[0];
  std::vector<double> trap(n, step);
  trap.front() *= 0.5;
  trap.back() *= 0.5;

  std::vector<double> cos_phi;
  if (geometry == field_geometry::perpendicular) {
    cos_phi.resize(numerics.phi_points);
    const int half = numerics.phi_points / 2;
    for (int k = 0; k < numerics.phi_points; ++k) {
      if (numerics.phi_points % 2 == 0 && k >= half)
        cos_phi[k] = -cos_phi[k - half];  // phi + pi: exact sign pair
      else
        cos_phi[k] = std::cos(two_pi * k / numerics.phi_points);
    }
  }

  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < n_transition_pairs; ++p) {
      const double w = dist.branch[p][i] * trap[i];
      if (w <= 0.0) continue;
      const double s = slopes[i][p];
      if (geometry == field_geometry::parallel) {
        weights_.push_back(w);
        phase_base_.push_back(s * cos_t[i] * e_v_per_m * 1e-6);
      } else {
        const double w_phi = w / numerics.phi_points;
        for (const double cp : cos_phi) {
          weights_.push_back(w_phi);
          phase_base_.push_back(s * sin_t[i] * cp * e_v_per_m * 1e-6);
        }
      }
    }
  }
}

namespace {

// Split t_E into refocused effective times and map them onto a shared
// lattice, so mirror points t and 2*tau - t land on the same bucket exactly.
struct effective_time_map {
  std::vector<double> unique_t;  // ascending
  std::vector<int> index_of;     // per input sample
  bool uniform_lattice = false;
  double base = 0.0;
  double step = 0.0;
};

effective_time_map fold_times(const std::vector<double>& t_e_us, double tau_us) {
  effective_time_map map;
  std::vector<double> teff(t_e_us.size());
  for (std::size_t j = 0; j < t_e_us.size(); ++j) {
    const double t = t_e_us[j];
    if (t < -1e-9 || t > 2.0 * tau_us + 1e-9)
      throw config_error("t_E grid must lie within [0, 2*tau]");
    teff[j] = t <= tau_us ? t : 2.0 * tau_us - t;
  }
  std::vector<double> sorted = teff;
  std::sort(sorted.begin(), sorted.end());
  const double merge_tol = 1e-9 * std::max(1.0, sorted.back());
  for (const double t : sorted) {
    if (map.unique_t.empty() || t - map.unique_t.back() > merge_tol) map.unique_t.push_back(t);
  }
  map.index_of.resize(teff.size());
  for (std::size_t j = 0; j < teff.size(); ++j) {
    const auto it = std::lower_bound(map.unique_t.begin(), map.unique_t.end(),
                                     teff[j] - merge_tol);
    map.index_of[j] = static_cast<int>(it - map.unique_t.begin());
  }

  if (map.unique_t.size() >= 3) {
    map.base = map.unique_t.front();
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < map.unique_t.size(); ++k)
      dt = std::min(dt, map.unique_t[k] - map.unique_t[k - 1]);
    map.step = dt;
    map.uniform_lattice = true;
    for (const double t : map.unique_t) {
      const double k = (t - map.base) / dt;
      if (std::abs(k - std::round(k)) > 1e-6 || k > 2e5) {
        map.uniform_lattice = false;
        break;
      }
    }
  }
  return map;
}

}  // namespace

std::vector<std::complex<double>> echo_synthesizer::evaluate(
    const sec_params& sec, double tau_us, const std::vector<double>& t_e_us) const {
  sec.validate();
  if (weights_.empty()) throw data_error("no resonant population");
  if (t_e_us.empty()) return {};

  const effective_time_map tmap = fold_times(t_e_us, tau_us);
  const std::size_t n_terms = weights_.size();
  const std::size_t n_kappa = gh_nodes_.size();
  const std::size_t m = n_terms * n_kappa;

  // Flattened (term, kappa') phase frequencies and weights.
  std::vector<double> freq(m), wt(m);
  double total_weight = 0.0;
  for (std::size_t t = 0; t < n_terms; ++t) {
    for (std::size_t l = 0; l < n_kappa; ++l) {
      const double kappa_l =
          sec.kappa_hz_per_v_per_m + sec.sigma_kappa_hz_per_v_per_m * gh_nodes_[l];
      freq[t * n_kappa + l] = phase_base_[t] * kappa_l;
      const double w = weights_[t] * gh_weights_[l];
      wt[t * n_kappa + l] = w;
      total_weight += w;
    }
  }

  const std::size_t n_unique = tmap.unique_t.size();
  std::vector<double> sum_re(n_unique, 0.0), sum_im(n_unique, 0.0);

  // Odd-symmetric phasor construction: sign(freq) rides only on the sine, so
  // +u/-u term pairs are bitwise conjugates and their imaginary parts cancel.
  auto phasor = [](double f, double t, double& c, double& s) {
    const double x = two_pi * std::abs(f) * t;
    c = std::cos(x);
    s = f >= 0.0 ? std::sin(x) : -std::sin(x);
  };

  if (tmap.uniform_lattice) {
    std::vector<double> re(m), im(m), step_re(m), step_im(m);
    for (std::size_t q = 0; q < m; ++q) {
      phasor(freq[q], tmap.base, re[q], im[q]);
      phasor(freq[q], tmap.step, step_re[q], step_im[q]);
    }
    std::size_t next_k = 0;
    const std::size_t k_max =
        static_cast<std::size_t>(std::round((tmap.unique_t.back() - tmap.base) / tmap.step));
    for (std::size_t k = 0; k <= k_max; ++k) {
      const double t_here = tmap.base + k * tmap.step;
      if (next_k < n_unique &&
          std::abs(tmap.unique_t[next_k] - t_here) <= 1e-6 * std::max(1.0, t_here)) {
        double acc_re = 0.0, acc_im = 0.0;
        for (std::size_t q = 0; q < m; ++q) {
          acc_re += wt[q] * re[q];
          acc_im += wt[q] * im[q];
        }
        sum_re[next_k] = acc_re;
        sum_im[next_k] = acc_im;
        ++next_k;
      }
      if (k == k_max) break;
      for (std::size_t q = 0; q < m; ++q) {
        const double r = re[q] * step_re[q] - im[q] * step_im[q];
        im[q] = re[q] * step_im[q] + im[q] * step_re[q];
        re[q] = r;
      }
    }
  } else {
    for (std::size_t k = 0; k < n_unique; ++k) {
      double acc_re = 0.0, acc_im = 0.0;
      for (std::size_t q = 0; q < m; ++q) {
        double c, s;
        phasor(freq[q], tmap.unique_t[k], c, s);
        acc_re += wt[q] * c;
        acc_im += wt[q] * s;
      }
      sum_re[k] = acc_re;
      sum_im[k] = acc_im;
    }
  }

  std::vector<std::complex<double>> out(t_e_us.size());
  for (std::size_t j = 0; j < t_e_us.size(); ++j) {
    const int k = tmap.index_of[j];
    out[j] = {sum_re[k] / total_weight, sum_im[k] / total_weight};
  }
  return out;
}

echo_curve echo_modulation(const spin_system& sys, const sec_params& sec,
                           const orientation_distribution& dist, double e_v_per_m,
                           double tau_us, const std::vector<double>& t_e_us,
                           field_geometry geometry, double b0_mt,
                           const echo_numerics& numerics) {
  if (e_v_per_m < 0.0) throw config_error("E-field magnitude must be >= 0");
  if (tau_us <= 0.0) throw config_error("tau must be positive");
  if (!dist.resonant) throw data_error("no resonant population");

  const echo_synthesizer synth(sys, dist, e_v_per_m, geometry, b0_mt, numerics);
  const auto signal = synth.evaluate(sec, tau_us, t_e_us);

  echo_curve curve;
  curve.t_e_us = t_e_us;
  curve.in_phase.resize(signal.size());
  curve.quadrature.resize(signal.size());
  for (std::size_t j = 0; j < signal.size(); ++j) {
    curve.in_phase[j] = signal[j].real();
    curve.quadrature[j] = signal[j].imag();
  }
  curve.geometry = geometry;
  curve.b0_mt = b0_mt;
  curve.e_v_per_m = e_v_per_m;
  curve.tau_us = tau_us;
  curve.kappa_hz_per_v_per_m = sec.kappa_hz_per_v_per_m;
  curve.sigma_kappa_hz_per_v_per_m = sec.sigma_kappa_hz_per_v_per_m;
  if (numerics.t2_us > 0.0) curve.absolute_scale = std::exp(-2.0 * tau_us / numerics.t2_us);
  return curve;
}

double quadrature_residual(const echo_curve& curve) {
  double mx = 0.0;
  for (const double q : curve.quadrature) mx = std::max(mx, std::abs(q));
  return mx;
}

}  // namespace secsim
