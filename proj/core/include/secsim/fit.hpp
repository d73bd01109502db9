#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "secsim/config.hpp"
#include "secsim/powder.hpp"
#include "secsim/sec.hpp"

namespace secsim {

// Resolved model context shared by every simulated curve in a fit: spin
// system, spectrometer settings, numeric grids, and the concrete field
// positions behind the Z/Int/XY labels.
struct model_context {
  spin_system sys;
  double mw_freq_mhz = 9700.0;
  double excitation_fwhm_mhz = 30.0;
  field_positions positions{};
  int theta_points = 721;
  int strain_nodes = 21;
  echo_numerics numerics{};

  double position_field(const std::string& label) const;  // "Z" | "Int" | "XY"
};

// Resolves auto field positions from the configured resonance geometry.
model_context make_model_context(const run_config& config);

// One measured echo trace: normalized echo versus E-field pulse duration.
struct experimental_curve {
  std::string position_label;  // Z | Int | XY
  field_geometry geometry = field_geometry::parallel;
  double e_v_per_m = 0.0;
  double tau_us = 0.0;
  std::vector<double> t_e_us;     // non-decreasing, >= 8 samples
  std::vector<double> echo;
  std::vector<double> sigma;      // optional per-point uncertainty, may be empty

  void validate() const;  // throws data_error
};

// Mean over curves of sum (S_sim - S_exp)^2 / sum (S_exp - mean(S_exp))^2.
// The per-curve variance normalization makes traces with different
// modulation depths weigh comparably.
double objective(const sec_params& params, const std::vector<experimental_curve>& curves,
                 const model_context& ctx);

// Same objective with distributions and phase tables built once; repeated
// evaluations at new (kappa, sigma_kappa) reuse them.
class curve_set_objective {
 public:
  curve_set_objective(std::vector<experimental_curve> curves, const model_context& ctx);
  double operator()(const sec_params& params) const;
  const std::vector<experimental_curve>& curves() const { return curves_; }

  // Simulated in-phase curve for one ingested trace at given parameters.
  std::vector<double> simulate(std::size_t curve_index, const sec_params& params) const;

 private:
  std::vector<experimental_curve> curves_;
  std::vector<std::shared_ptr<echo_synthesizer>> synths_;
};

struct fit_result {
  double kappa_hat = 0.0;
  double sigma_kappa_hat = 0.0;
  double kappa_err = 0.0;        // NaN when the local quadratic model is singular
  double sigma_kappa_err = 0.0;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free Nelder-Mead descent over (kappa, sigma_kappa) with
// sigma_kappa >= 0 enforced by reflection. Converged when the relative
// objective change stays < 1e-6 over 3 iterations or the relative simplex
// size drops below 1e-4. Non-convergence within max_iterations returns the
// best point with converged = false. Uncertainties come from the local
// quadratic approximation (finite-difference Hessian) at the minimum.
fit_result fit_kappa(const std::vector<experimental_curve>& curves, const sec_params& init,
                     const model_context& ctx, int max_iterations = 500);

// Distribution-weighted mean |delta_f| per unit applied field, Hz/(V/m),
// using the exact two-diagonalization frequency shift at the mean kappa.
double sensitivity(const spin_system& sys, const sec_params& sec,
                   const orientation_distribution& dist, double e_v_per_m,
                   field_geometry geometry, double b0_mt, int phi_points = 72);

struct detection_limit {
  double modulation_depth = 0.0;        // 1 - cos(2 pi df_min tau)
  bool e_min_defined = false;
  double e_min_v_per_m = 0.0;           // df_min / sensitivity when defined
};

detection_limit min_detectable_field(double delta_f_min_hz, double tau_us,
                                     double sensitivity_hz_per_v_per_m = 0.0);

}  // namespace secsim
