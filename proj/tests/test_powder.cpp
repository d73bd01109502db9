#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "secsim/constants.hpp"
#include "secsim/errors.hpp"
#include "secsim/powder.hpp"

using namespace secsim;

namespace {

spin_system default_system() { return spin_system{}; }

const double mw_mhz = 9700.0;

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    acc += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
  return acc;
}

// Dense brute-force resonance scan: sign changes of nu_pair - nu_mw on a
// fine field grid, kept only where the line is actually visible.
std::vector<double> brute_force_roots(const spin_system& sys, double theta) {
  std::vector<double> roots;
  const double step = 2e-3;
  std::array<double, n_transition_pairs> prev{};
  bool have_prev = false;
  for (double b = 320.0; b <= 375.0; b += step) {
    const eigen_system es = eigenlevels(build_hamiltonian(sys, b, theta));
    for (int p = 0; p < n_transition_pairs; ++p) {
      const auto pair = transition_pair(p);
      const double f = es.energies_mhz[pair[1]] - es.energies_mhz[pair[0]] - mw_mhz;
      if (have_prev && prev[p] * f <= 0.0 && (prev[p] != 0.0 || f != 0.0)) {
        for (const auto& line : transition_lines(sys, b, theta))
          if (line.lower_index == pair[0] && line.upper_index == pair[1])
            roots.push_back(b - step * 0.5);
      }
      prev[p] = f;
    }
    have_prev = true;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

TEST_CASE("theta grid spans [0, pi] uniformly") {
  const auto grid = theta_grid(721);
  REQUIRE(grid.size() == 721);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == doctest::Approx(pi).epsilon(1e-12));
  CHECK(grid[360] == doctest::Approx(pi / 2).epsilon(1e-12));
}

TEST_CASE("pole resonance fields and polarities") {
  const auto roots = resonance_fields(default_system(), mw_mhz, 0.0);
  REQUIRE(roots.size() == 2);
  CHECK(roots[0].field_mt == doctest::Approx(335.1970).epsilon(5e-6));
  CHECK(roots[1].field_mt == doctest::Approx(357.8459).epsilon(5e-6));
  // Polarized initial state: low-field line absorptive, high-field emissive.
  CHECK(roots[0].polarity == 1);
  CHECK(roots[1].polarity == -1);
  CHECK(roots[0].amplitude == doctest::Approx(0.4625).epsilon(1e-3));
  CHECK(roots[1].amplitude == doctest::Approx(-0.4625).epsilon(1e-3));
  CHECK(roots[1].field_mt - roots[0].field_mt ==
        doctest::Approx(2.0 * 317.0 / (2.0 * mu_b_over_h_mhz_per_mt)).epsilon(1e-5));
}

TEST_CASE("equator resonance fields") {
  const auto roots = resonance_fields(default_system(), mw_mhz, pi / 2.0);
  REQUIRE(roots.size() == 2);
  // B = sqrt(nu (nu -+ D)) / (g muB/h)
  const double c = 2.0 * mu_b_over_h_mhz_per_mt;
  CHECK(roots[0].field_mt ==
        doctest::Approx(std::sqrt(mw_mhz * (mw_mhz - 317.0)) / c).epsilon(1e-6));
  CHECK(roots[1].field_mt ==
        doctest::Approx(std::sqrt(mw_mhz * (mw_mhz + 317.0)) / c).epsilon(1e-6));
  CHECK(roots[0].polarity == 1);
  CHECK(roots[1].polarity == -1);
}

TEST_CASE("bisection roots agree with a dense brute-force scan") {
  const spin_system sys = default_system();
  for (const double theta : {0.0, 0.5, 1.1, pi / 2.0}) {
    const auto fast = resonance_fields(sys, mw_mhz, theta);
    const auto brute = brute_force_roots(sys, theta);
    REQUIRE(fast.size() == brute.size());
    for (std::size_t i = 0; i < fast.size(); ++i)
      CHECK(std::abs(fast[i].field_mt - brute[i]) < 1e-2);
  }
}

TEST_CASE("angular resonance map covers both pole branches") {
  const auto branches = angular_resonance_map(default_system(), mw_mhz, theta_grid(181));
  REQUIRE(branches.size() >= 2);
  for (const auto& b : branches) {
    REQUIRE(b.theta_rad.size() == b.field_mt.size());
    REQUIRE(b.theta_rad.size() == b.polarity.size());
    CHECK(!b.theta_rad.empty());
    for (const double f : b.field_mt) {
      CHECK(f >= 320.0);
      CHECK(f <= 375.0);
    }
  }
}

TEST_CASE("orientation distribution: unit area, symmetry, pole peak at Z") {
  const auto dist = compute_orientation_distribution(default_system(), mw_mhz, 335.197, 30.0);
  REQUIRE(dist.resonant);
  const auto total = dist.total();
  CHECK(trapezoid(dist.theta, total) == doctest::Approx(1.0).epsilon(1e-9));
  const std::size_t n = dist.theta.size();
  for (std::size_t i = 0; i < n; ++i)
    CHECK(total[i] == total[n - 1 - i]);  // mirror fill is exact
  const double peak_deg = dist.peak_theta() * deg_per_rad;
  CHECK((peak_deg < 45.0 || peak_deg > 135.0));
}

TEST_CASE("huge bandwidth removes the orientation selection") {
  // When every orientation is excited the Gaussian selection factor is flat,
  // so (with strain off) the weight collapses to solid angle times the summed
  // line amplitude at the working field.
  spin_system sys = default_system();
  sys.d_strain_fwhm_mhz = 0.0;
  const auto dist = compute_orientation_distribution(sys, mw_mhz, 345.0, 1e6, 361, 1);
  REQUIRE(dist.resonant);
  const auto total = dist.total();
  const std::size_t n = dist.theta.size();

  std::vector<double> reference(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double amp = 0.0;
    for (const auto& line : transition_lines(sys, 345.0, dist.theta[i]))
      amp += std::abs(line.amplitude);
    reference[i] = std::sin(dist.theta[i]) * amp;
  }
  const double area = trapezoid(dist.theta, reference);
  REQUIRE(area > 0.0);
  for (auto& v : reference) v /= area;

  const double peak = *std::max_element(reference.begin(), reference.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (reference[i] < 0.05 * peak) continue;  // skip amplitude zero crossings
    CHECK(std::abs(total[i] - reference[i]) < 0.01 * reference[i]);
  }

  // A narrow window at the same field for contrast: most of the sphere dark.
  const auto narrow = compute_orientation_distribution(sys, mw_mhz, 345.0, 1.0, 361, 1);
  const auto narrow_total = narrow.total();
  int dark = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (narrow_total[i] < 1e-6) ++dark;
  CHECK(dark > static_cast<int>(n) / 2);
}

TEST_CASE("zero strain, narrow excitation selects the resonant angles only") {
  spin_system sys = default_system();
  sys.d_strain_fwhm_mhz = 0.0;
  const double b0 = 345.0;
  const auto dist = compute_orientation_distribution(sys, mw_mhz, b0, 1.0);
  REQUIRE(dist.resonant);
  const auto total = dist.total();

  // Gather angles where some pair is resonant at b0.
  std::vector<double> resonant_thetas;
  for (const auto& branch : angular_resonance_map(sys, mw_mhz, theta_grid(2001)))
    for (std::size_t i = 0; i < branch.theta_rad.size(); ++i)
      if (std::abs(branch.field_mt[i] - b0) < 0.15) resonant_thetas.push_back(branch.theta_rad[i]);
  REQUIRE(!resonant_thetas.empty());

  for (std::size_t i = 0; i < dist.theta.size(); ++i) {
    if (total[i] < 1e-4) continue;
    double min_gap = 1e300;
    for (const double th : resonant_thetas)
      min_gap = std::min(min_gap, std::abs(dist.theta[i] - th));
    CHECK(min_gap < 0.05);
  }
}

TEST_CASE("off-resonance field reports no resonant population") {
  const auto dist = compute_orientation_distribution(default_system(), mw_mhz, 500.0, 30.0);
  CHECK(!dist.resonant);
  for (const double w : dist.total()) CHECK(w == 0.0);
}

TEST_CASE("spectrum: equal populations give an identically zero spectrum") {
  spin_system sys = default_system();
  sys.pops.p_plus = sys.pops.p_zero = sys.pops.p_minus = 1.0 / 3.0;
  std::vector<double> grid;
  for (double b = 320.0; b <= 375.0; b += 0.5) grid.push_back(b);
  const auto spec = edfs_spectrum(sys, mw_mhz, grid, 5.0, 181, 11);
  for (const double v : spec.intensity) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("spectrum magnitude is linear in the population difference") {
  auto integral_abs = [](const field_spectrum& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < s.field_mt.size(); ++i)
      acc += 0.5 * (std::abs(s.intensity[i]) + std::abs(s.intensity[i + 1])) *
             (s.field_mt[i + 1] - s.field_mt[i]);
    return acc;
  };
  std::vector<double> grid;
  for (double b = 320.0; b <= 375.0; b += 0.25) grid.push_back(b);

  spin_system strong = default_system();  // p0 - p+- = 0.925
  spin_system weak = default_system();
  weak.pops.p_plus = weak.pops.p_minus = 0.2125;
  weak.pops.p_zero = 0.575;  // p0 - p+- = 0.3625, exactly 0.925 / 2 * ... scaled

  const double ratio = (0.575 - 0.2125) / (0.95 - 0.025);
  const auto s1 = edfs_spectrum(strong, mw_mhz, grid, 5.0, 181, 11);
  const auto s2 = edfs_spectrum(weak, mw_mhz, grid, 5.0, 181, 11);
  CHECK(integral_abs(s2) == doctest::Approx(ratio * integral_abs(s1)).epsilon(1e-9));
}

TEST_CASE("zero-strain spectrum peaks at the equator turning points") {
  spin_system sys = default_system();
  sys.d_strain_fwhm_mhz = 0.0;
  std::vector<double> grid;
  for (double b = 330.0; b <= 362.0; b += 0.01) grid.push_back(b);
  const auto spec = edfs_spectrum(sys, mw_mhz, grid, 2.0, 721, 1);

  std::size_t i_max = 0, i_min = 0;
  for (std::size_t i = 0; i < spec.intensity.size(); ++i) {
    if (spec.intensity[i] > spec.intensity[i_max]) i_max = i;
    if (spec.intensity[i] < spec.intensity[i_min]) i_min = i;
  }
  const double c = 2.0 * mu_b_over_h_mhz_per_mt;
  CHECK(std::abs(spec.field_mt[i_max] - std::sqrt(mw_mhz * (mw_mhz - 317.0)) / c) < 0.1);
  CHECK(std::abs(spec.field_mt[i_min] - std::sqrt(mw_mhz * (mw_mhz + 317.0)) / c) < 0.1);
}

TEST_CASE("resonance-field sets match for D and -D") {
  spin_system plus = default_system();
  spin_system minus = default_system();
  minus.d_mhz = -317.0;
  for (const double theta : {0.0, 0.7, pi / 2.0}) {
    const auto rp = resonance_fields(plus, mw_mhz, theta);
    const auto rm = resonance_fields(minus, mw_mhz, theta);
    REQUIRE(rp.size() == rm.size());
    for (std::size_t i = 0; i < rp.size(); ++i)
      CHECK(rp[i].field_mt == doctest::Approx(rm[i].field_mt).epsilon(1e-6));
  }
}

TEST_CASE("effective field profile") {
  const auto dist = compute_orientation_distribution(default_system(), mw_mhz, 335.197, 30.0);

  SUBCASE("zero field gives a zero profile") {
    for (const double v : effective_field_profile(dist, 0.0)) CHECK(v == 0.0);
  }
  SUBCASE("profile is E cos(theta) weighted by the distribution") {
    const double e = 1.5e6;
    const auto profile = effective_field_profile(dist, e);
    const auto total = dist.total();
    for (std::size_t i = 0; i < dist.theta.size(); i += 97)
      CHECK(profile[i] ==
            doctest::Approx(e * std::cos(dist.theta[i]) * total[i]).epsilon(1e-12));
  }
  SUBCASE("integral vanishes by antisymmetry about the equator") {
    const auto profile = effective_field_profile(dist, 1.5e6);
    std::vector<double> theta = dist.theta;
    CHECK(std::abs(trapezoid(theta, profile)) < 1e-6 * 1.5e6);
  }
}

TEST_CASE("auto field positions hit the spectrum turning points") {
  const spin_system sys = default_system();
  const auto pos = resolve_field_positions(sys, mw_mhz, std::nullopt, std::nullopt, std::nullopt);
  CHECK(pos.z_mt == doctest::Approx(335.1970).epsilon(1e-5));
  const double c = 2.0 * mu_b_over_h_mhz_per_mt;
  CHECK(pos.xy_mt == doctest::Approx(std::sqrt(mw_mhz * (mw_mhz + 317.0)) / c).epsilon(1e-6));
  CHECK(pos.int_mt == doctest::Approx(0.5 * (pos.z_mt + pos.xy_mt)).epsilon(1e-12));

  // Explicit overrides pass through untouched.
  const auto fixed = resolve_field_positions(sys, mw_mhz, 335.0, 340.0, 352.0);
  CHECK(fixed.z_mt == 335.0);
  CHECK(fixed.int_mt == 340.0);
  CHECK(fixed.xy_mt == 352.0);
}

TEST_CASE("auto positions are stable under D -> -D") {
  spin_system minus = default_system();
  minus.d_mhz = -317.0;
  const auto pos_plus =
      resolve_field_positions(default_system(), mw_mhz, std::nullopt, std::nullopt, std::nullopt);
  const auto pos_minus =
      resolve_field_positions(minus, mw_mhz, std::nullopt, std::nullopt, std::nullopt);
  CHECK(pos_plus.z_mt == doctest::Approx(pos_minus.z_mt).epsilon(1e-6));
  CHECK(pos_plus.xy_mt == doctest::Approx(pos_minus.xy_mt).epsilon(1e-6));
}
