#pragma once

#include <numbers>

namespace secsim {

// Bohr magneton over Planck constant, MHz per mT (equivalently GHz/T).
inline constexpr double mu_b_over_h_mhz_per_mt = 13.9962449;

// 1 / (2 sqrt(2 ln 2)): converts a Gaussian FWHM to its standard deviation.
inline constexpr double fwhm_to_sigma = 0.42466090014400953;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double deg_per_rad = 180.0 / std::numbers::pi;
inline constexpr double rad_per_deg = std::numbers::pi / 180.0;

// g * mu_B/h * B0, MHz.
inline constexpr double zeeman_mhz(double g, double b0_mt) {
  return g * mu_b_over_h_mhz_per_mt * b0_mt;
}

}  // namespace secsim
