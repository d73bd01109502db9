#include "secsim/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "secsim/constants.hpp"
#include "secsim/errors.hpp"

namespace secsim {

double model_context::position_field(const std::string& label) const {
  std::string key;
  for (const char c : label) key.push_back(static_cast<char>(std::tolower(c)));
  if (key == "z") return positions.z_mt;
  if (key == "int" || key == "int.") return positions.int_mt;
  if (key == "xy") return positions.xy_mt;
  throw data_error("unknown field-position label '" + label + "' (expected Z|Int|XY)");
}

model_context make_model_context(const run_config& config) {
  config.validate();
  model_context ctx;
  ctx.sys = config.spin;
  ctx.mw_freq_mhz = config.mw_freq_mhz();
  ctx.excitation_fwhm_mhz = config.experiment.excitation_fwhm_mhz;
  ctx.theta_points = config.numerics.theta_points;
  ctx.strain_nodes = config.numerics.strain_nodes;
  ctx.numerics.kappa_nodes = config.numerics.kappa_nodes;
  ctx.numerics.phi_points = config.numerics.phi_points;
  ctx.numerics.t2_us = config.experiment.t2_us;
  scan_window window;
  window.b_min_mt = config.experiment.field_min_mt;
  window.b_max_mt = config.experiment.field_max_mt;
  window.root_tol_mhz = config.numerics.root_tol_mhz;
  ctx.positions = resolve_field_positions(ctx.sys, ctx.mw_freq_mhz, config.experiment.field_z_mt,
                                          config.experiment.field_int_mt,
                                          config.experiment.field_xy_mt, window);
  return ctx;
}

void experimental_curve::validate() const {
  if (t_e_us.size() < 8) throw data_error("experimental curve needs at least 8 samples");
  if (echo.size() != t_e_us.size())
    throw data_error("experimental curve: echo and t_E column lengths differ");
  if (!sigma.empty() && sigma.size() != t_e_us.size())
    throw data_error("experimental curve: sigma column length differs");
  for (std::size_t i = 0; i < t_e_us.size(); ++i) {
    if (!std::isfinite(t_e_us[i]) || !std::isfinite(echo[i]))
      throw data_error("experimental curve contains non-finite values");
    if (i > 0 && t_e_us[i] < t_e_us[i - 1])
      throw data_error("experimental curve: t_E must be non-decreasing");
  }
  if (tau_us <= 0.0) throw data_error("experimental curve: tau must be positive");
  if (e_v_per_m < 0.0) throw data_error("experimental curve: E must be >= 0");
}

curve_set_objective::curve_set_objective(std::vector<experimental_curve> curves,
                                         const model_context& ctx)
    : curves_(std::move(curves)) {
  if (curves_.empty()) throw data_error("no experimental curves supplied");
  std::map<std::string, orientation_distribution> dist_cache;
  for (const auto& curve : curves_) {
    curve.validate();
    auto it = dist_cache.find(curve.position_label);
    if (it == dist_cache.end()) {
      const double b0 = ctx.position_field(curve.position_label);
      orientation_distribution dist =
          compute_orientation_distribution(ctx.sys, ctx.mw_freq_mhz, b0,
                                           ctx.excitation_fwhm_mhz, ctx.theta_points,
                                           ctx.strain_nodes);
      if (!dist.resonant)
        throw data_error("no resonant population at position " + curve.position_label);
      it = dist_cache.emplace(curve.position_label, std::move(dist)).first;
    }
    synths_.push_back(std::make_shared<echo_synthesizer>(
        ctx.sys, it->second, curve.e_v_per_m, curve.geometry,
        ctx.position_field(curve.position_label), ctx.numerics));
    double mean = 0.0;
    for (const double y : curve.echo) mean += y;
    mean /= static_cast<double>(curve.echo.size());
    double var = 0.0;
    for (const double y : curve.echo) var += (y - mean) * (y - mean);
    if (var <= 0.0)
      throw data_error("experimental curve at position " + curve.position_label +
                       " has zero variance; nothing to normalize against");
  }
}

std::vector<double> curve_set_objective::simulate(std::size_t curve_index,
                                                  const sec_params& params) const {
  const auto& curve = curves_.at(curve_index);
  const auto signal = synths_.at(curve_index)->evaluate(params, curve.tau_us, curve.t_e_us);
  std::vector<double> in_phase(signal.size());
  for (std::size_t j = 0; j < signal.size(); ++j) in_phase[j] = signal[j].real();
  return in_phase;
}

double curve_set_objective::operator()(const sec_params& params) const {
  double total = 0.0;
  for (std::size_t k = 0; k < curves_.size(); ++k) {
    const auto& curve = curves_[k];
    const auto sim = simulate(k, params);
    double mean = 0.0;
    for (const double y : curve.echo) mean += y;
    mean /= static_cast<double>(curve.echo.size());
    double ssr = 0.0, var = 0.0;
    for (std::size_t j = 0; j < curve.echo.size(); ++j) {
      ssr += (sim[j] - curve.echo[j]) * (sim[j] - curve.echo[j]);
      var += (curve.echo[j] - mean) * (curve.echo[j] - mean);
    }
    total += ssr / var;
  }
  return total / static_cast<double>(curves_.size());
}

double objective(const sec_params& params, const std::vector<experimental_curve>& curves,
                 const model_context& ctx) {
  return curve_set_objective(curves, ctx)(params);
}

namespace {

using point2 = std::array<double, 2>;  // (kappa, sigma_kappa); sigma via |.|

sec_params to_params(const point2& p) {
  return {p[0], std::abs(p[1])};
}

}  // namespace

fit_result fit_kappa(const std::vector<experimental_curve>& curves, const sec_params& init,
                     const model_context& ctx, int max_iterations) {
  init.validate();
  double peak_to_peak = 0.0;
  for (const auto& curve : curves) {
    const auto [lo, hi] = std::minmax_element(curve.echo.begin(), curve.echo.end());
    peak_to_peak = std::max(peak_to_peak, *hi - *lo);
  }
  if (peak_to_peak <= 1e-6)
    throw data_error("no curve shows visible modulation; nothing to fit");

  const curve_set_objective obj(curves, ctx);
  const auto f = [&obj](const point2& p) { return obj(to_params(p)); };

  // Nelder-Mead over 2 parameters.
  std::array<point2, 3> simplex;
  simplex[0] = {init.kappa_hz_per_v_per_m, init.sigma_kappa_hz_per_v_per_m};
  simplex[1] = simplex[0];
  simplex[1][0] += std::max(0.25 * std::abs(simplex[0][0]), 0.1);
  simplex[2] = simplex[0];
  simplex[2][1] += std::max(0.25 * std::abs(simplex[0][1]), 0.05);
  std::array<double, 3> fv = {f(simplex[0]), f(simplex[1]), f(simplex[2])};

  fit_result result;
  int stable_count = 0;
  double prev_best = std::numeric_limits<double>::infinity();
  int iter = 0;
  bool converged = false;
  for (; iter < max_iterations; ++iter) {
    // Order ascending by objective.
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const std::array<point2, 3> sx = {simplex[order[0]], simplex[order[1]], simplex[order[2]]};
    const std::array<double, 3> sf = {fv[order[0]], fv[order[1]], fv[order[2]]};
    simplex = sx;
    fv = sf;

    // Convergence: tiny simplex, or best value flat over 3 iterations while
    // all vertices agree. The spread check guards against declaring victory
    // when only the best vertex has stalled and the simplex is still large.
    if (std::abs(prev_best - fv[0]) <= 1e-6 * std::max(1e-30, std::abs(prev_best)))
      ++stable_count;
    else
      stable_count = 0;
    prev_best = fv[0];
    double size = 0.0;
    for (int v = 1; v < 3; ++v)
      for (int d = 0; d < 2; ++d)
        size = std::max(size, std::abs(simplex[v][d] - simplex[0][d]));
    const double scale = std::max({1e-12, std::abs(simplex[0][0]), std::abs(simplex[0][1])});
    const double spread = fv[2] - fv[0];
    if (size / scale < 1e-4 ||
        (stable_count >= 3 && spread <= 1e-6 * std::max(1e-12, std::abs(fv[0])))) {
      converged = true;
      break;
    }

    const point2 centroid = {0.5 * (simplex[0][0] + simplex[1][0]),
                             0.5 * (simplex[0][1] + simplex[1][1])};
    const auto blend = [&](double coef) {
      return point2{centroid[0] + coef * (simplex[2][0] - centroid[0]),
                    centroid[1] + coef * (simplex[2][1] - centroid[1])};
    };
    const point2 reflected = blend(-1.0);
    const double f_ref = f(reflected);
    if (f_ref < fv[0]) {
      const point2 expanded = blend(-2.0);
      const double f_exp = f(expanded);
      if (f_exp < f_ref) {
        simplex[2] = expanded;
        fv[2] = f_exp;
      } else {
        simplex[2] = reflected;
        fv[2] = f_ref;
      }
    } else if (f_ref < fv[1]) {
      simplex[2] = reflected;
      fv[2] = f_ref;
    } else {
      const point2 contracted = blend(f_ref < fv[2] ? -0.5 : 0.5);
      const double f_con = f(contracted);
      if (f_con < std::min(f_ref, fv[2])) {
        simplex[2] = contracted;
        fv[2] = f_con;
      } else {
        for (int v = 1; v < 3; ++v) {
          for (int d = 0; d < 2; ++d)
            simplex[v][d] = simplex[0][d] + 0.5 * (simplex[v][d] - simplex[0][d]);
          fv[v] = f(simplex[v]);
        }
      }
    }
  }

  const int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  const sec_params fitted = to_params(simplex[best]);
  result.kappa_hat = fitted.kappa_hz_per_v_per_m;
  result.sigma_kappa_hat = fitted.sigma_kappa_hz_per_v_per_m;
  result.objective_value = fv[best];
  result.iterations = iter;
  result.converged = converged;

  // Local quadratic approximation of the objective at the minimum.
  const double h0 = std::max(1e-4, 1e-3 * std::abs(result.kappa_hat));
  const double h1 = std::max(1e-4, 1e-3 * std::abs(result.sigma_kappa_hat));
  const point2 p0 = {result.kappa_hat, result.sigma_kappa_hat};
  const double f0 = result.objective_value;
  const auto fh = [&](double dk, double ds) { return f(point2{p0[0] + dk, p0[1] + ds}); };
  const double h00 = (fh(h0, 0) + fh(-h0, 0) - 2 * f0) / (h0 * h0);
  const double h11 = (fh(0, h1) + fh(0, -h1) - 2 * f0) / (h1 * h1);
  const double h01 =
      (fh(h0, h1) - fh(h0, -h1) - fh(-h0, h1) + fh(-h0, -h1)) / (4 * h0 * h1);
  const double det = h00 * h11 - h01 * h01;
  std::size_t n_points = 0;
  for (const auto& curve : curves) n_points += curve.t_e_us.size();
  const double dof = std::max<double>(1.0, static_cast<double>(n_points) - 2.0);
  if (det > 0.0 && h00 > 0.0) {
    const double scale = 2.0 * f0 / dof;
    result.kappa_err = std::sqrt(std::max(0.0, scale * h11 / det));
    result.sigma_kappa_err = std::sqrt(std::max(0.0, scale * h00 / det));
  } else {
    result.kappa_err = std::numeric_limits<double>::quiet_NaN();
    result.sigma_kappa_err = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

double sensitivity(const spin_system& sys, const sec_params& sec,
                   const orientation_distribution& dist, double e_v_per_m,
                   field_geometry geometry, double b0_mt, int phi_points) {
  if (e_v_per_m <= 0.0) throw config_error("sensitivity needs E > 0");
  if (!dist.resonant) throw data_error("no resonant population");

  const std::size_t n = dist.theta.size();
  double weighted = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w_pair[n_transition_pairs];
    double w_sum = 0.0;
    for (int p = 0; p < n_transition_pairs; ++p) {
      w_pair[p] = dist.branch[p][i];
      w_sum += w_pair[p];
    }
    if (w_sum <= 0.0) continue;
    const double theta = dist.theta[i];
    if (geometry == field_geometry::parallel) {
      const double dd =
          delta_d_mhz(e_v_per_m, cos_angle_to_dipole(theta, 0.0, geometry),
                      sec.kappa_hz_per_v_per_m);
      const delta_f_result shifts = delta_f(sys, b0_mt, theta, dd);
      for (int p = 0; p < n_transition_pairs; ++p) {
        weighted += w_pair[p] * std::abs(shifts.shift_mhz[p]);
        total += w_pair[p];
      }
    } else {
      for (int k = 0; k < phi_points; ++k) {
        const double phi = two_pi * k / phi_points;
        const double dd =
            delta_d_mhz(e_v_per_m, cos_angle_to_dipole(theta, phi, geometry),
                        sec.kappa_hz_per_v_per_m);
        const delta_f_result shifts = delta_f(sys, b0_mt, theta, dd);
        for (int p = 0; p < n_transition_pairs; ++p) {
          weighted += w_pair[p] * std::abs(shifts.shift_mhz[p]) / phi_points;
          total += w_pair[p] / phi_points;
        }
      }
    }
  }
  if (total <= 0.0) throw data_error("no resonant population");
  // Mean |df| is in MHz; report Hz per (V/m).
  return weighted / total * 1e6 / e_v_per_m;
}

detection_limit min_detectable_field(double delta_f_min_hz, double tau_us,
                                     double sensitivity_hz_per_v_per_m) {
  if (tau_us <= 0.0) throw config_error("tau must be positive");
  detection_limit limit;
  limit.modulation_depth = 1.0 - std::cos(two_pi * delta_f_min_hz * tau_us * 1e-6);
  if (sensitivity_hz_per_v_per_m > 0.0) {
    limit.e_min_defined = true;
    limit.e_min_v_per_m = delta_f_min_hz / sensitivity_hz_per_v_per_m;
  }
  return limit;
}

}  // namespace secsim
