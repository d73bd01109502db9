#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "secsim/config.hpp"
#include "secsim/constants.hpp"
#include "secsim/csv.hpp"
#include "secsim/errors.hpp"
#include "secsim/fit.hpp"
#include "secsim/powder.hpp"
#include "secsim/sec.hpp"
#include "secsim/spin.hpp"

namespace fs = std::filesystem;
using namespace secsim;

namespace {

struct cli_options {
  std::string config_path;
  std::string out_dir;   // empty: use [paths] out_dir
  std::string position = "auto";
  std::string geometry;  // empty: use [experiment] geometry
  bool verbose = false;
  std::vector<std::string> data_paths;  // fit only
};

struct position_entry {
  std::string label;
  double b0_mt;
};

std::vector<position_entry> selected_positions(const cli_options& opt,
                                               const field_positions& pos) {
  if (opt.position == "Z") return {{"Z", pos.z_mt}};
  if (opt.position == "Int") return {{"Int", pos.int_mt}};
  if (opt.position == "XY") return {{"XY", pos.xy_mt}};
  return {{"Z", pos.z_mt}, {"Int", pos.int_mt}, {"XY", pos.xy_mt}};
}

std::vector<field_geometry> selected_geometries(const cli_options& opt, const run_config& cfg) {
  const std::string g = opt.geometry.empty() ? cfg.experiment.geometry : opt.geometry;
  if (g == "par") return {field_geometry::parallel};
  if (g == "perp") return {field_geometry::perpendicular};
  return {field_geometry::parallel, field_geometry::perpendicular};
}

std::string geometry_tag(field_geometry g) {
  return g == field_geometry::parallel ? "par" : "perp";
}

fs::path resolve_out_dir(const cli_options& opt, const run_config& cfg) {
  const fs::path dir = opt.out_dir.empty() ? fs::path(cfg.paths.out_dir) : fs::path(opt.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw data_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void append_system_metadata(csv_table& table, const run_config& cfg) {
  table.metadata.emplace_back("generator", "secsim");
  table.metadata.emplace_back("g", format_double(cfg.spin.g));
  table.metadata.emplace_back("d_mhz", format_double(cfg.spin.d_mhz));
  table.metadata.emplace_back("d_strain_fwhm_mhz", format_double(cfg.spin.d_strain_fwhm_mhz));
  table.metadata.emplace_back("mw_freq_ghz", format_double(cfg.experiment.mw_freq_ghz));
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw data_error("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw data_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw data_error("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
}

orientation_distribution distribution_at(const run_config& cfg, double b0_mt) {
  return compute_orientation_distribution(cfg.spin, cfg.mw_freq_mhz(), b0_mt,
                                          cfg.experiment.excitation_fwhm_mhz,
                                          cfg.numerics.theta_points, cfg.numerics.strain_nodes);
}

echo_numerics echo_numerics_from(const run_config& cfg) {
  echo_numerics num;
  num.kappa_nodes = cfg.numerics.kappa_nodes;
  num.phi_points = cfg.numerics.phi_points;
  num.t2_us = cfg.experiment.t2_us;
  return num;
}

std::vector<double> echo_time_grid(const run_config& cfg) {
  const int n = cfg.numerics.echo_points;
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i)
    t[i] = 2.0 * cfg.experiment.tau_us * i / static_cast<double>(n - 1);
  return t;
}

double depth_at_tau(const echo_curve& curve) {
  // Sample nearest to t_E = tau; the grid always brackets it.
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < curve.t_e_us.size(); ++j) {
    const double gap = std::abs(curve.t_e_us[j] - curve.tau_us);
    if (gap < best_gap) {
      best_gap = gap;
      best = j;
    }
  }
  return 1.0 - curve.in_phase[best];
}

int cmd_spectrum(const cli_options& opt, const run_config& cfg) {
  const fs::path out_dir = resolve_out_dir(opt, cfg);
  const int n = cfg.numerics.field_points;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i)
    grid[i] = cfg.experiment.field_min_mt +
              (cfg.experiment.field_max_mt - cfg.experiment.field_min_mt) * i /
                  static_cast<double>(n - 1);
  const field_spectrum spectrum =
      edfs_spectrum(cfg.spin, cfg.mw_freq_mhz(), grid, cfg.experiment.linewidth_fwhm_mhz,
                    cfg.numerics.theta_points, cfg.numerics.strain_nodes,
                    cfg.numerics.root_tol_mhz);

  double peak = 0.0;
  std::size_t i_max = 0, i_min = 0;
  for (std::size_t i = 0; i < spectrum.intensity.size(); ++i) {
    peak = std::max(peak, std::abs(spectrum.intensity[i]));
    if (spectrum.intensity[i] > spectrum.intensity[i_max]) i_max = i;
    if (spectrum.intensity[i] < spectrum.intensity[i_min]) i_min = i;
  }
  // Equal sublevel populations leave only eigenvector-norm roundoff (~1e-16)
  // in the amplitudes, so the zero test needs a tolerance.
  const bool all_zero = peak < 1e-12;
  if (all_zero)
    std::cerr << "warning: all transition amplitudes vanish for the configured populations; "
                 "the spectrum is identically zero\n";

  csv_table table;
  append_system_metadata(table, cfg);
  table.metadata.emplace_back("linewidth_fwhm_mhz",
                              format_double(cfg.experiment.linewidth_fwhm_mhz));
  table.metadata.emplace_back("pop_plus", format_double(cfg.spin.pops.p_plus));
  table.metadata.emplace_back("pop_zero", format_double(cfg.spin.pops.p_zero));
  table.metadata.emplace_back("pop_minus", format_double(cfg.spin.pops.p_minus));
  table.columns = {"B_mT", "intensity"};
  for (std::size_t i = 0; i < spectrum.field_mt.size(); ++i)
    table.rows.push_back({spectrum.field_mt[i], spectrum.intensity[i]});
  const fs::path path = out_dir / "spectrum.csv";
  write_csv(path.string(), table);

  std::cout << "wrote " << path.string() << " (" << n << " points)\n";
  if (!all_zero) {
    std::cout << "absorptive maximum at " << format_double(spectrum.field_mt[i_max])
              << " mT, emissive minimum at " << format_double(spectrum.field_mt[i_min])
              << " mT\n";
  }
  return 0;
}

int cmd_orientations(const cli_options& opt, const run_config& cfg) {
  const fs::path out_dir = resolve_out_dir(opt, cfg);
  const model_context ctx = make_model_context(cfg);
  if (opt.verbose)
    std::cout << "field positions: Z = " << format_double(ctx.positions.z_mt)
              << " mT, Int = " << format_double(ctx.positions.int_mt)
              << " mT, XY = " << format_double(ctx.positions.xy_mt) << " mT\n";

  for (const auto& [label, b0] : selected_positions(opt, ctx.positions)) {
    const orientation_distribution dist = distribution_at(cfg, b0);
    if (!dist.resonant)
      throw data_error("no resonant population at position " + label + " (B0 = " +
                       format_double(b0) + " mT)");
    const std::vector<double> total = dist.total();
    const double peak = *std::max_element(total.begin(), total.end());

    csv_table dist_table;
    append_system_metadata(dist_table, cfg);
    dist_table.metadata.emplace_back("position", label);
    dist_table.metadata.emplace_back("B0_mT", format_double(b0));
    dist_table.metadata.emplace_back("excitation_fwhm_mhz",
                                     format_double(cfg.experiment.excitation_fwhm_mhz));
    dist_table.metadata.emplace_back("normalization", dist.normalization);
    dist_table.metadata.emplace_back("peak_weight", format_double(peak));
    dist_table.metadata.emplace_back("peak_theta_deg",
                                     format_double(dist.peak_theta() * deg_per_rad));
    dist_table.columns = {"theta_deg", "weight"};
    for (std::size_t i = 0; i < dist.theta.size(); ++i)
      dist_table.rows.push_back({dist.theta[i] * deg_per_rad, total[i]});
    const fs::path dist_path = out_dir / ("orientations_" + label + ".csv");
    write_csv(dist_path.string(), dist_table);

    const std::vector<double> profile =
        effective_field_profile(dist, cfg.experiment.e_field_v_per_m);
    csv_table prof_table;
    append_system_metadata(prof_table, cfg);
    prof_table.metadata.emplace_back("position", label);
    prof_table.metadata.emplace_back("B0_mT", format_double(b0));
    prof_table.metadata.emplace_back("E_V_per_m",
                                     format_double(cfg.experiment.e_field_v_per_m));
    prof_table.columns = {"theta_deg", "Eeff_V_per_m"};
    for (std::size_t i = 0; i < dist.theta.size(); ++i)
      prof_table.rows.push_back({dist.theta[i] * deg_per_rad, profile[i]});
    const fs::path prof_path = out_dir / ("effective_field_" + label + ".csv");
    write_csv(prof_path.string(), prof_table);

    std::cout << "wrote " << dist_path.string() << " and " << prof_path.string()
              << " (peak at " << format_double(dist.peak_theta() * deg_per_rad) << " deg)\n";
  }

  const auto branches =
      angular_resonance_map(cfg.spin, cfg.mw_freq_mhz(), theta_grid(cfg.numerics.theta_points));
  csv_table map_table;
  append_system_metadata(map_table, cfg);
  map_table.columns = {"theta_deg", "B_mT", "pair", "polarity"};
  std::size_t n_points = 0;
  for (const auto& b : branches) {
    for (std::size_t i = 0; i < b.theta_rad.size(); ++i)
      map_table.rows.push_back({b.theta_rad[i] * deg_per_rad, b.field_mt[i],
                                static_cast<double>(b.pair_id),
                                static_cast<double>(b.polarity[i])});
    n_points += b.theta_rad.size();
  }
  const fs::path map_path = out_dir / "resonance_map.csv";
  write_csv(map_path.string(), map_table);
  std::cout << "wrote " << map_path.string() << " (" << branches.size() << " branches, "
            << n_points << " points)\n";
  return 0;
}

csv_table echo_curve_table(const echo_curve& curve, const run_config& cfg) {
  csv_table table;
  append_system_metadata(table, cfg);
  table.metadata.emplace_back("position", curve.position_label);
  table.metadata.emplace_back("geometry", to_string(curve.geometry));
  table.metadata.emplace_back("B0_mT", format_double(curve.b0_mt));
  table.metadata.emplace_back("E_V_per_m", format_double(curve.e_v_per_m));
  table.metadata.emplace_back("tau_us", format_double(curve.tau_us));
  table.metadata.emplace_back("kappa_hz_per_v_per_m",
                              format_double(curve.kappa_hz_per_v_per_m));
  table.metadata.emplace_back("sigma_kappa_hz_per_v_per_m",
                              format_double(curve.sigma_kappa_hz_per_v_per_m));
  table.metadata.emplace_back("absolute_scale", format_double(curve.absolute_scale));
  table.columns = {"t_E_us", "in_phase", "quadrature"};
  for (std::size_t j = 0; j < curve.t_e_us.size(); ++j)
    table.rows.push_back({curve.t_e_us[j], curve.in_phase[j], curve.quadrature[j]});
  return table;
}

int cmd_echo(const cli_options& opt, const run_config& cfg) {
  const fs::path out_dir = resolve_out_dir(opt, cfg);
  const model_context ctx = make_model_context(cfg);
  const echo_numerics num = echo_numerics_from(cfg);
  const std::vector<double> t_grid = echo_time_grid(cfg);

  csv_table summary;
  append_system_metadata(summary, cfg);
  summary.metadata.emplace_back("positions", "0 = Z, 1 = Int, 2 = XY");
  summary.metadata.emplace_back("geometries", "0 = parallel, 1 = perpendicular");
  summary.metadata.emplace_back("E_V_per_m", format_double(cfg.experiment.e_field_v_per_m));
  summary.metadata.emplace_back("tau_us", format_double(cfg.experiment.tau_us));
  summary.columns = {"position", "geometry", "B0_mT", "depth_at_tau", "max_abs_quadrature"};

  const auto positions = selected_positions(opt, ctx.positions);
  const auto geometries = selected_geometries(opt, cfg);
  for (std::size_t p = 0; p < positions.size(); ++p) {
    const auto& [label, b0] = positions[p];
    const orientation_distribution dist = distribution_at(cfg, b0);
    if (!dist.resonant)
      throw data_error("no resonant population at position " + label + " (B0 = " +
                       format_double(b0) + " mT)");
    for (const field_geometry geo : geometries) {
      echo_curve curve =
          echo_modulation(cfg.spin, cfg.sec, dist, cfg.experiment.e_field_v_per_m,
                          cfg.experiment.tau_us, t_grid, geo, b0, num);
      curve.position_label = label;
      const fs::path path = out_dir / ("echo_" + label + "_" + geometry_tag(geo) + ".csv");
      write_csv(path.string(), echo_curve_table(curve, cfg));
      const double depth = depth_at_tau(curve);
      const double quad = quadrature_residual(curve);
      summary.rows.push_back({static_cast<double>(p), geo == field_geometry::parallel ? 0.0 : 1.0,
                              b0, depth, quad});
      std::cout << "wrote " << path.string() << " (depth at tau = " << format_double(depth)
                << ")\n";
    }
  }
  const fs::path summary_path = out_dir / "echo_summary.csv";
  write_csv(summary_path.string(), summary);
  std::cout << "wrote " << summary_path.string() << "\n";
  return 0;
}

double meta_double(const csv_table& table, const std::string& key, const std::string& path) {
  const std::string* value = table.find_meta(key);
  if (!value)
    throw data_error(path + ": missing required metadata key '" + key + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(*value, &used);
    if (used != value->size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw data_error(path + ": metadata key '" + key + "' is not a number: '" + *value + "'");
  }
}

experimental_curve load_curve(const std::string& path) {
  const csv_table table = read_csv(path);
  experimental_curve curve;

  const std::string* position = table.find_meta("position");
  if (!position) throw data_error(path + ": missing required metadata key 'position'");
  curve.position_label = *position;

  const std::string* geometry = table.find_meta("geometry");
  if (!geometry) throw data_error(path + ": missing required metadata key 'geometry'");
  try {
    curve.geometry = geometry_from_string(*geometry);
  } catch (const config_error&) {
    throw data_error(path + ": unknown geometry '" + *geometry + "'");
  }

  curve.e_v_per_m = meta_double(table, "E_V_per_m", path);
  curve.tau_us = meta_double(table, "tau_us", path);

  const int t_col = table.column_index("t_E_us");
  if (t_col < 0) throw data_error(path + ": missing column 't_E_us'");
  int y_col = table.column_index("echo");
  if (y_col < 0) y_col = table.column_index("in_phase");
  if (y_col < 0) throw data_error(path + ": missing column 'echo' (or 'in_phase')");
  const int s_col = table.column_index("sigma");

  for (const auto& row : table.rows) {
    curve.t_e_us.push_back(row[t_col]);
    curve.echo.push_back(row[y_col]);
    if (s_col >= 0) curve.sigma.push_back(row[s_col]);
  }
  try {
    curve.validate();
  } catch (const data_error& e) {
    throw data_error(path + ": " + e.what());
  }
  return curve;
}

std::vector<std::string> find_curve_files(const cli_options& opt, const run_config& cfg) {
  if (!opt.data_paths.empty()) return opt.data_paths;
  if (cfg.paths.data_dir.empty())
    throw config_error("no data files given and [paths] data_dir is not set");
  if (!fs::is_directory(cfg.paths.data_dir))
    throw config_error("[paths] data_dir '" + cfg.paths.data_dir + "' is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(cfg.paths.data_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw config_error("no .csv files found in data_dir '" + cfg.paths.data_dir + "'");
  return files;
}

int cmd_fit(const cli_options& opt, const run_config& cfg) {
  const fs::path out_dir = resolve_out_dir(opt, cfg);
  const model_context ctx = make_model_context(cfg);

  std::vector<experimental_curve> curves;
  for (const std::string& path : find_curve_files(opt, cfg)) {
    curves.push_back(load_curve(path));
    if (opt.verbose)
      std::cout << "loaded " << path << " (" << curves.back().t_e_us.size() << " points, "
                << curves.back().position_label << ", " << to_string(curves.back().geometry)
                << ")\n";
  }

  const auto t0 = std::chrono::steady_clock::now();
  const fit_result result = fit_kappa(curves, cfg.sec, ctx);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Headline sensitivity figure: Z position, parallel geometry, fitted kappa.
  sec_params fitted;
  fitted.kappa_hz_per_v_per_m = result.kappa_hat;
  fitted.sigma_kappa_hz_per_v_per_m = result.sigma_kappa_hat;
  const orientation_distribution dist_z = distribution_at(cfg, ctx.positions.z_mt);
  const double sens =
      sensitivity(cfg.spin, fitted, dist_z, cfg.experiment.e_field_v_per_m,
                  field_geometry::parallel, ctx.positions.z_mt, cfg.numerics.phi_points);
  const detection_limit limit =
      min_detectable_field(cfg.delta_f_min_hz, cfg.experiment.tau_us, sens);

  const curve_set_objective model(curves, ctx);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto sim = model.simulate(k, fitted);
    const auto& curve = curves[k];
    csv_table overlay;
    append_system_metadata(overlay, cfg);
    overlay.metadata.emplace_back("position", curve.position_label);
    overlay.metadata.emplace_back("geometry", to_string(curve.geometry));
    overlay.metadata.emplace_back("E_V_per_m", format_double(curve.e_v_per_m));
    overlay.metadata.emplace_back("tau_us", format_double(curve.tau_us));
    overlay.metadata.emplace_back("kappa_hz_per_v_per_m", format_double(result.kappa_hat));
    overlay.metadata.emplace_back("sigma_kappa_hz_per_v_per_m",
                                  format_double(result.sigma_kappa_hat));
    overlay.columns = {"t_E_us", "echo", "model"};
    for (std::size_t j = 0; j < curve.t_e_us.size(); ++j)
      overlay.rows.push_back({curve.t_e_us[j], curve.echo[j], sim[j]});
    const fs::path path = out_dir / ("fit_overlay_" + curve.position_label + "_" +
                                     geometry_tag(curve.geometry) + ".csv");
    write_csv(path.string(), overlay);
    if (opt.verbose) std::cout << "wrote " << path.string() << "\n";
  }

  std::string report;
  report += "kappa_hz_per_v_per_m = " + format_double(result.kappa_hat) + "\n";
  report += "kappa_err_hz_per_v_per_m = " + format_double(result.kappa_err) + "\n";
  report += "sigma_kappa_hz_per_v_per_m = " + format_double(result.sigma_kappa_hat) + "\n";
  report += "sigma_kappa_err_hz_per_v_per_m = " + format_double(result.sigma_kappa_err) + "\n";
  report += "objective = " + format_double(result.objective_value) + "\n";
  report += "iterations = " + std::to_string(result.iterations) + "\n";
  report += std::string("converged = ") + (result.converged ? "true" : "false") + "\n";
  report += "n_curves = " + std::to_string(curves.size()) + "\n";
  report += "sensitivity_z_par_hz_per_v_per_m = " + format_double(sens) + "\n";
  report += "delta_f_min_hz = " + format_double(cfg.delta_f_min_hz) + "\n";
  report += "modulation_depth_at_delta_f_min = " + format_double(limit.modulation_depth) + "\n";
  report += "e_min_v_per_m = " +
            (limit.e_min_defined ? format_double(limit.e_min_v_per_m) : std::string("undefined")) +
            "\n";
  const fs::path report_path = out_dir / "fit_result.txt";
  write_text_atomic(report_path, report);

  std::cout << "kappa = " << format_double(result.kappa_hat) << " +- "
            << format_double(result.kappa_err) << " Hz/(V/m)\n";
  std::cout << "sigma_kappa = " << format_double(result.sigma_kappa_hat) << " +- "
            << format_double(result.sigma_kappa_err) << " Hz/(V/m)\n";
  std::cout << "reference for this system: kappa = 0.59 +- 0.03 Hz/(V/m)\n";
  std::cout << "sensitivity (Z, parallel) = " << format_double(sens) << " Hz/(V/m)\n";
  std::cout << "min detectable field = "
            << (limit.e_min_defined ? format_double(limit.e_min_v_per_m) + " V/m"
                                    : std::string("undefined"))
            << " at delta_f_min = " << format_double(cfg.delta_f_min_hz) << " Hz\n";
  std::cout << "objective = " << format_double(result.objective_value) << " after "
            << result.iterations << " iterations ("
            << (result.converged ? "converged" : "not converged") << ", "
            << format_double(seconds) << " s)\n";
  std::cout << "wrote " << report_path.string() << "\n";

  if (!result.converged) throw numeric_error("fit did not converge within the iteration limit");
  return 0;
}

int cmd_sensitivity(const cli_options& opt, const run_config& cfg) {
  const fs::path out_dir = resolve_out_dir(opt, cfg);
  const model_context ctx = make_model_context(cfg);

  csv_table table;
  append_system_metadata(table, cfg);
  table.metadata.emplace_back("positions", "0 = Z, 1 = Int, 2 = XY");
  table.metadata.emplace_back("geometries", "0 = parallel, 1 = perpendicular");
  table.metadata.emplace_back("kappa_hz_per_v_per_m",
                              format_double(cfg.sec.kappa_hz_per_v_per_m));
  table.metadata.emplace_back("delta_f_min_hz", format_double(cfg.delta_f_min_hz));
  table.metadata.emplace_back("reported_range_hz_per_v_per_m", "0.36 .. 0.51");
  table.columns = {"position", "geometry", "B0_mT", "sensitivity_hz_per_v_per_m",
                   "e_min_v_per_m"};

  std::cout << "sensitivity [Hz/(V/m)] and minimum detectable field [V/m] at delta_f_min = "
            << format_double(cfg.delta_f_min_hz) << " Hz\n";
  const auto positions = selected_positions(opt, ctx.positions);
  const auto geometries = selected_geometries(opt, cfg);
  for (std::size_t p = 0; p < positions.size(); ++p) {
    const auto& [label, b0] = positions[p];
    const orientation_distribution dist = distribution_at(cfg, b0);
    if (!dist.resonant)
      throw data_error("no resonant population at position " + label + " (B0 = " +
                       format_double(b0) + " mT)");
    for (const field_geometry geo : geometries) {
      const double sens = sensitivity(cfg.spin, cfg.sec, dist, cfg.experiment.e_field_v_per_m,
                                      geo, b0, cfg.numerics.phi_points);
      const detection_limit limit =
          min_detectable_field(cfg.delta_f_min_hz, cfg.experiment.tau_us, sens);
      table.rows.push_back({static_cast<double>(p),
                            geo == field_geometry::parallel ? 0.0 : 1.0, b0, sens,
                            limit.e_min_defined ? limit.e_min_v_per_m : 0.0});
      std::printf("  %-4s %-13s B0 = %8.3f mT   %.4f   %s\n", label.c_str(),
                  to_string(geo).c_str(), b0, sens,
                  limit.e_min_defined ? format_double(limit.e_min_v_per_m).c_str()
                                      : "undefined");
    }
  }
  std::cout << "reported values for this system span 0.36 to 0.51 +- 0.02 Hz/(V/m)\n";

  const fs::path path = out_dir / "sensitivity.csv";
  write_csv(path.string(), table);
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-electric coupling simulator for a photogenerated triplet"};
  app.require_subcommand(1);

  cli_options opt;
  app.add_option("--config", opt.config_path, "configuration file (INI-style)")
      ->required()
      ->option_text("PATH");
  app.add_option("--out", opt.out_dir, "output directory (overrides [paths] out_dir)")
      ->option_text("DIR");
  app.add_option("--position", opt.position, "field position selection (default: auto = all)")
      ->check(CLI::IsMember({"Z", "Int", "XY", "auto"}));
  app.add_option("--geometry", opt.geometry, "E-field geometry (overrides [experiment] geometry)")
      ->check(CLI::IsMember({"par", "perp", "both"}));
  app.add_flag("--verbose", opt.verbose, "print resolved parameters and per-file progress");

  auto* spectrum =
      app.add_subcommand("spectrum", "simulate the echo-detected field-swept spectrum");
  auto* orientations = app.add_subcommand(
      "orientations", "orientation-selection distributions and effective-field profiles");
  auto* echo = app.add_subcommand("echo", "E-field-modulated echo curves");
  auto* fit = app.add_subcommand("fit", "estimate (kappa, sigma_kappa) from measured curves");
  fit->add_option("data", opt.data_paths,
                  "curve CSV files (default: every .csv in [paths] data_dir)");
  auto* sens = app.add_subcommand("sensitivity", "frequency-shift sensitivity per position");

  // Let global options (--verbose, --out, ...) appear after the subcommand.
  for (auto* sub : {spectrum, orientations, echo, fit, sens}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const run_config cfg = parse_config(opt.config_path);
    if (opt.verbose) std::cout << "configuration:\n" << serialize_config(cfg);
    if (spectrum->parsed()) return cmd_spectrum(opt, cfg);
    if (orientations->parsed()) return cmd_orientations(opt, cfg);
    if (echo->parsed()) return cmd_echo(opt, cfg);
    if (fit->parsed()) return cmd_fit(opt, cfg);
    if (sens->parsed()) return cmd_sensitivity(opt, cfg);
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
