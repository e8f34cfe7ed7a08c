// Command-line front end: phase-matching curves, pair-detection simulation,
// and coincidence analysis wired into reproducible CSV/JSON outputs.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdc/crystal_optics.hpp"
#include "spdc/errors.hpp"
#include "spdc/io.hpp"
#include "spdc/pair_statistics.hpp"
#include "spdc/phase_matching.hpp"

namespace {

namespace fs = std::filesystem;
using spdc::io::RunManifest;

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;
constexpr int exit_domain = 3;

struct GlobalOptions {
  std::string crystal_file;
  double pump_nm = 266.0;
  std::string output_dir;
  std::uint64_t seed = 1;
  std::string format = "csv";

  spdc::io::TableFormat table_format() const {
    return format == "tsv" ? spdc::io::TableFormat::tsv : spdc::io::TableFormat::csv;
  }
  spdc::UniaxialCrystal load_crystal() const {
    return crystal_file.empty() ? spdc::UniaxialCrystal::bbo()
                                : spdc::UniaxialCrystal::from_json_file(crystal_file);
  }
  std::string crystal_hash() const {
    return crystal_file.empty() ? std::string("builtin:bbo")
                                : spdc::io::fnv1a64_file(crystal_file);
  }
  fs::path out_path(const std::string& name) const {
    return fs::path(output_dir.empty() ? "." : output_dir) / name;
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream oss;
  oss.setf(std::ios::fixed);
  oss.precision(precision);
  oss << v;
  return oss.str();
}

void add_common_parameters(RunManifest& manifest, const GlobalOptions& g) {
  manifest.parameters["crystal"] = g.crystal_file.empty() ? "builtin:bbo" : g.crystal_file;
  manifest.parameters["pump_nm"] = fmt(g.pump_nm);
  manifest.parameters["format"] = g.format;
  manifest.crystal_file_hash = g.crystal_hash();
}

// ---------------------------------------------------------------- index ----

struct IndexArgs {
  double lambda_nm = 0.0;
  std::optional<double> theta_eff_deg;
};

int cmd_index(const GlobalOptions& g, const IndexArgs& a) {
  const auto crystal = g.load_crystal();
  // Wavelength bounds are a static property of the crystal file, so an
  // out-of-range --lambda is an argument error rather than a solver failure.
  try {
    crystal.require_in_range(a.lambda_nm);
  } catch (const spdc::DomainError& e) {
    throw spdc::UsageError(e.what());
  }
  if (a.theta_eff_deg && !(*a.theta_eff_deg >= 0.0 && *a.theta_eff_deg <= 90.0))
    throw spdc::UsageError("--theta-eff must lie in [0, 90] degrees");

  std::ostringstream report;
  report << "crystal: " << crystal.name()
         << (g.crystal_file.empty() ? " (builtin)" : " (" + g.crystal_file + ")") << "\n";
  report << "lambda: " << fmt(a.lambda_nm, 2) << " nm\n";
  report << "n_o: " << fmt(crystal.ordinary_index(a.lambda_nm), 6) << "\n";
  report << "n_e_principal: " << fmt(crystal.principal_extraordinary_index(a.lambda_nm), 6)
         << "\n";
  if (a.theta_eff_deg) {
    report << "n_e(theta_eff=" << fmt(*a.theta_eff_deg, 4)
           << " deg): " << fmt(crystal.extraordinary_index_at_angle(*a.theta_eff_deg, a.lambda_nm), 6);
    if (*a.theta_eff_deg == 0.0)
      report << "  [ordinary limit]";
    else if (*a.theta_eff_deg == 90.0)
      report << "  [principal extraordinary limit]";
    report << "\n";
  }
  std::cout << report.str();

  if (!g.output_dir.empty()) {
    const auto report_path = g.out_path("index.txt");
    std::ofstream(report_path, std::ios::binary) << report.str();
    RunManifest manifest;
    manifest.command = "index";
    add_common_parameters(manifest, g);
    manifest.parameters["lambda_nm"] = fmt(a.lambda_nm, 4);
    if (a.theta_eff_deg) manifest.parameters["theta_eff_deg"] = fmt(*a.theta_eff_deg, 4);
    manifest.outputs = {"index.txt"};
    manifest.write(g.out_path("index_manifest.json"));
  }
  return exit_ok;
}

// ----------------------------------------------------------------- tune ----

struct TuneArgs {
  std::string sweep = "theta";
  double from_deg = 0.0;
  double to_deg = 0.0;
  int steps = 181;
  double theta_offset_deg = 0.0;
  double phi_offset_deg = 0.0;
  double theta0_deg = 42.7;
  double phi0_deg = 0.0;
  bool refraction = false;
  bool plot = false;
};

int cmd_tune(const GlobalOptions& g, const TuneArgs& a) {
  const auto crystal = g.load_crystal();
  const spdc::PumpConfig pump{g.pump_nm, 200.0};

  spdc::OrientationAngles base;
  base.theta0_deg = a.theta0_deg;
  base.phi0_deg = a.phi0_deg;
  base.theta_deg = a.theta0_deg + a.theta_offset_deg;
  base.phi_deg = a.phi0_deg + a.phi_offset_deg;
  const auto swept =
      a.sweep == "phi" ? spdc::SweptParameter::phi : spdc::SweptParameter::theta;
  base.order = swept == spdc::SweptParameter::phi ? spdc::RotationOrder::YXZ
                                                  : spdc::RotationOrder::XYZ;

  const auto curve = spdc::sweep_tuning_curve(crystal, pump, base, swept, a.from_deg,
                                              a.to_deg, a.steps, a.refraction);

  const std::string csv_name = "tuning_curve." + g.format;
  spdc::io::write_tuning_curve(curve, g.out_path(csv_name), g.table_format());
  RunManifest manifest;
  manifest.command = "tune";
  add_common_parameters(manifest, g);
  manifest.parameters["sweep"] = a.sweep;
  manifest.parameters["from_deg"] = fmt(a.from_deg);
  manifest.parameters["to_deg"] = fmt(a.to_deg);
  manifest.parameters["steps"] = std::to_string(a.steps);
  manifest.parameters["theta_offset_deg"] = fmt(a.theta_offset_deg);
  manifest.parameters["phi_offset_deg"] = fmt(a.phi_offset_deg);
  manifest.parameters["theta0_deg"] = fmt(a.theta0_deg);
  manifest.parameters["phi0_deg"] = fmt(a.phi0_deg);
  manifest.parameters["refraction_correction"] = a.refraction ? "true" : "false";
  manifest.outputs = {csv_name};
  if (a.plot) {
    spdc::io::write_tuning_curve_svg(curve, g.out_path("tuning_curve.svg"));
    manifest.outputs.push_back("tuning_curve.svg");
  }
  manifest.write(g.out_path("tune_manifest.json"));

  const auto matched = curve.matched_count();
  std::cout << "tuning curve: " << curve.points.size() << " steps, " << matched
            << " phase matched -> " << g.out_path(csv_name).string() << "\n";
  if (matched == 0)
    std::cerr << "warning: no phase-matched points in the swept range\n";
  return exit_ok;
}

// ---------------------------------------------------------------- solve ----

struct SolveArgs {
  std::optional<double> signal_nm;
  std::optional<double> idler_nm;
  double theta0_deg = 42.7;
};

int cmd_solve(const GlobalOptions& g, const SolveArgs& a) {
  if (a.signal_nm.has_value() == a.idler_nm.has_value())
    throw spdc::UsageError("give exactly one of --signal or --idler");
  const auto crystal = g.load_crystal();

  double target_signal_nm;
  if (a.signal_nm) {
    target_signal_nm = *a.signal_nm;
  } else {
    if (!(*a.idler_nm > g.pump_nm))
      throw spdc::DomainError("idler target must exceed the pump wavelength");
    target_signal_nm = spdc::idler_wavelength(g.pump_nm, *a.idler_nm);
  }

  const double theta_eff = spdc::solve_phase_match_angle(crystal, target_signal_nm, g.pump_nm);
  const auto solution = spdc::solve_signal_wavelength(crystal, theta_eff, g.pump_nm);

  std::ostringstream report;
  report << "target signal: " << fmt(target_signal_nm, 2) << " nm (idler "
         << fmt(solution.lambda_idler_nm, 2) << " nm)\n";
  report << "theta_eff: " << fmt(theta_eff, 4) << " deg\n";
  report << "residual delta_k: " << solution.delta_k_rad_per_mm << " rad/mm\n";
  report << "stage pairs reaching theta_eff (theta_deg, phi_deg), theta0 = "
         << fmt(a.theta0_deg, 2) << " deg:\n";

  const double cos_eff = std::cos(theta_eff * std::numbers::pi / 180.0);
  for (int offset = -5; offset <= 5; ++offset) {
    const double theta = offset == 0 ? theta_eff : a.theta0_deg + offset;
    const double c = std::cos(theta * std::numbers::pi / 180.0);
    if (!(c > 0.0) || cos_eff / c > 1.0) continue; // phi would not exist
    const double phi = std::acos(cos_eff / c) * 180.0 / std::numbers::pi;
    report << "  theta = " << fmt(theta, 2) << ", phi = " << fmt(phi, 2);
    if (offset == 0) report << "  (pure theta tilt)";
    report << "\n";
  }
  std::cout << report.str();

  if (!g.output_dir.empty()) {
    std::ofstream(g.out_path("solve.txt"), std::ios::binary) << report.str();
    RunManifest manifest;
    manifest.command = "solve";
    add_common_parameters(manifest, g);
    manifest.parameters["target_signal_nm"] = fmt(target_signal_nm, 4);
    manifest.parameters["theta0_deg"] = fmt(a.theta0_deg);
    manifest.outputs = {"solve.txt"};
    manifest.write(g.out_path("solve_manifest.json"));
  }
  return exit_ok;
}

// ------------------------------------------------------------- simulate ----

struct SimulateArgs {
  spdc::DetectionConfig config;
  int threads = 1;
};

void add_detection_flags(CLI::App* cmd, spdc::DetectionConfig& config) {
  cmd->add_option("--pair-rate", config.pair_rate_per_mw, "generated pairs per s per mW")
      ->capture_default_str();
  cmd->add_option("--power", config.pump_power_mw, "pump power, mW")->capture_default_str();
  cmd->add_option("--eta-signal", config.eta_signal, "signal-arm detection efficiency")
      ->capture_default_str();
  cmd->add_option("--eta-idler", config.eta_idler, "idler-arm detection efficiency")
      ->capture_default_str();
  cmd->add_option("--dark-signal", config.dark_rate_signal, "signal dark counts per s")
      ->capture_default_str();
  cmd->add_option("--dark-idler", config.dark_rate_idler, "idler dark counts per s")
      ->capture_default_str();
  cmd->add_option("--jitter-signal", config.jitter_sigma_signal_ps,
                  "signal timing jitter sigma, ps")
      ->capture_default_str();
  cmd->add_option("--jitter-idler", config.jitter_sigma_idler_ps,
                  "idler timing jitter sigma, ps")
      ->capture_default_str();
  cmd->add_option("--dead-time", config.dead_time_ps, "non-paralyzable dead time, ps")
      ->capture_default_str();
  cmd->add_option("--duration", config.duration_s, "integration time, s")
      ->capture_default_str();
}

void add_detection_parameters(RunManifest& manifest, const spdc::DetectionConfig& c) {
  manifest.parameters["pair_rate_per_mw"] = fmt(c.pair_rate_per_mw, 6);
  manifest.parameters["pump_power_mw"] = fmt(c.pump_power_mw, 6);
  manifest.parameters["eta_signal"] = fmt(c.eta_signal, 8);
  manifest.parameters["eta_idler"] = fmt(c.eta_idler, 8);
  manifest.parameters["dark_rate_signal"] = fmt(c.dark_rate_signal, 4);
  manifest.parameters["dark_rate_idler"] = fmt(c.dark_rate_idler, 4);
  manifest.parameters["jitter_sigma_signal_ps"] = fmt(c.jitter_sigma_signal_ps, 4);
  manifest.parameters["jitter_sigma_idler_ps"] = fmt(c.jitter_sigma_idler_ps, 4);
  manifest.parameters["dead_time_ps"] = fmt(c.dead_time_ps, 4);
  manifest.parameters["duration_s"] = fmt(c.duration_s, 6);
}

int cmd_simulate(const GlobalOptions& g, const SimulateArgs& a) {
  spdc::DetectionConfig config = a.config;
  config.rng_seed = g.seed;
  const auto [signal, idler] = spdc::simulate_timestamp_streams(config, a.threads);

  const std::string signal_name = "signal_timestamps." + g.format;
  const std::string idler_name = "idler_timestamps." + g.format;
  spdc::io::write_timestamps(signal, g.out_path(signal_name), g.table_format());
  spdc::io::write_timestamps(idler, g.out_path(idler_name), g.table_format());

  RunManifest manifest;
  manifest.command = "simulate";
  add_common_parameters(manifest, g);
  add_detection_parameters(manifest, config);
  manifest.rng_seed = config.rng_seed;
  manifest.has_seed = true;
  manifest.outputs = {signal_name, idler_name};
  manifest.write(g.out_path("simulate_manifest.json"));

  std::cout << "signal events: " << signal.times_ps.size() << " -> "
            << g.out_path(signal_name).string() << "\n";
  std::cout << "idler events: " << idler.times_ps.size() << " -> "
            << g.out_path(idler_name).string() << "\n";
  return exit_ok;
}

// -------------------------------------------------------------- analyze ----

struct AnalyzeArgs {
  std::vector<std::string> files;
  double tau_ps = 100.0;
  double window_ps = 10000.0;
  double duration_s = 0.0; // 0: derive from the data
};

int cmd_analyze(const GlobalOptions& g, const AnalyzeArgs& a) {
  std::vector<fs::path> paths(a.files.begin(), a.files.end());
  auto [signal, idler] = spdc::io::read_timestamps(paths);
  if (a.duration_s > 0.0) signal.duration_s = idler.duration_s = a.duration_s;

  auto hist = spdc::subtract_accidentals(
      spdc::histogram_delays(signal, idler, a.tau_ps, a.window_ps));

  std::ostringstream report;
  report << "signal events: " << signal.times_ps.size() << "\n";
  report << "idler events: " << idler.times_ps.size() << "\n";
  report << "integration time: " << fmt(hist.integration_time_s, 3) << " s\n";
  report << "bins: " << hist.counts.size() << " x " << fmt(a.tau_ps, 1) << " ps, window +-"
         << fmt(a.window_ps, 1) << " ps\n";
  report << "accidental floor: " << fmt(hist.accidental_floor_per_bin, 4)
         << " counts/bin\n";

  if (hist.empty_warning) {
    std::cerr << "warning: one or both timestamp streams are empty; histogram is empty\n";
  }

  const double t = hist.integration_time_s > 0.0 ? hist.integration_time_s : 1.0;
  if (hist.has_peak) {
    report << "corrected peak area: " << fmt(hist.corrected_peak_area, 1) << " counts ("
           << fmt(hist.corrected_peak_area / t, 3) << " counts/s)\n";
    try {
      const auto peak = spdc::fit_coincidence_peak(hist);
      report << "peak center: " << fmt(peak.center_ps, 2) << " ps\n";
      report << "peak fwhm: " << fmt(peak.fwhm_ps, 2) << " +- " << fmt(peak.fwhm_error_ps, 2)
             << " ps\n";
      const double sigma = peak.fit.parameters[2];
      const double window = spdc::car_window_ps(sigma);
      const double accidentals_cps = hist.accidental_floor_per_bin * (window / a.tau_ps) / t;
      const double car_value = spdc::car(hist.corrected_peak_area / t, accidentals_cps);
      report << "CAR (center +- 2 sigma window): " << fmt(car_value, 2) << "\n";
    } catch (const spdc::Error& e) {
      report << "peak fit unavailable: " << e.what() << "\n";
    }
    const double n1 = static_cast<double>(signal.times_ps.size()) / t;
    const double n2 = static_cast<double>(idler.times_ps.size()) / t;
    const double n12 = hist.corrected_peak_area / t;
    if (n12 > 0.0)
      report << "klyshko pair rate: " << fmt(spdc::klyshko_pair_rate(n1, n2, n12), 1)
             << " counts/s\n";
  } else {
    report << "no significant coincidence peak\n";
    if (hist.accidental_floor_per_bin > 0.0) {
      // Flat histogram: compare the central region against its own floor.
      double central = 0.0;
      int central_n = 0;
      for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (std::abs(hist.delay_of_bin(i)) <= 10.0 * a.tau_ps) {
          central += static_cast<double>(hist.counts[i]);
          ++central_n;
        }
      }
      if (central_n > 0)
        report << "CAR (central bins vs floor): "
               << fmt(central / central_n / hist.accidental_floor_per_bin, 3) << "\n";
    }
  }
  std::cout << report.str();

  const std::string hist_name = "histogram." + g.format;
  spdc::io::write_histogram(hist, g.out_path(hist_name), g.table_format());
  std::ofstream(g.out_path("fit_report.txt"), std::ios::binary) << report.str();

  RunManifest manifest;
  manifest.command = "analyze";
  add_common_parameters(manifest, g);
  manifest.parameters["tau_ps"] = fmt(a.tau_ps, 2);
  manifest.parameters["window_ps"] = fmt(a.window_ps, 2);
  for (std::size_t i = 0; i < a.files.size(); ++i)
    manifest.parameters["input_" + std::to_string(i)] = a.files[i];
  manifest.outputs = {hist_name, "fit_report.txt"};
  manifest.write(g.out_path("analyze_manifest.json"));
  return exit_ok;
}

// ----------------------------------------------------------- power-scan ----

struct PowerScanArgs {
  std::vector<double> powers_mw;
  spdc::DetectionConfig config;
  double tau_ps = 100.0;
  double window_ps = 40000.0;
  int threads = 1;
};

int cmd_power_scan(const GlobalOptions& g, const PowerScanArgs& a) {
  if (a.powers_mw.size() < 3)
    throw spdc::UsageError("power scan needs at least 3 pump powers (--powers)");
  auto powers = a.powers_mw;
  std::sort(powers.begin(), powers.end());

  spdc::DetectionConfig config = a.config;
  config.rng_seed = g.seed;
  const auto result = spdc::power_scan(config, powers, a.tau_ps, a.window_ps, a.threads);

  std::size_t ok = 0;
  for (const auto& p : result.points)
    if (!p.failed) ++ok;

  std::ostringstream summary;
  summary << "points: " << result.points.size() << " (" << ok << " succeeded)\n";
  for (const auto& p : result.points)
    if (p.failed)
      summary << "  failed at " << fmt(p.power_mw, 3) << " mW: " << p.note << "\n";
    else if (!p.car_defined && !p.note.empty())
      summary << "  " << fmt(p.power_mw, 3) << " mW: " << p.note << " (CAR undefined)\n";
  if (ok >= 2) {
    auto line = [&](const char* label, const spdc::numerics::FitResult& fit) {
      summary << label << ": slope " << fmt(fit.parameters[0], 3) << " +- "
              << fmt(fit.uncertainties[0], 3) << " counts/s/mW, intercept "
              << fmt(fit.parameters[1], 3) << ", R^2 " << fmt(fit.r_squared, 6) << "\n";
    };
    line("N1 vs P", result.n1_fit);
    line("N2 vs P", result.n2_fit);
    line("N12 vs P", result.n12_fit);
  }
  if (result.car_fit_valid) {
    summary << "CAR vs P power law a*P^b: a " << fmt(result.car_fit.free_fit.parameters[0], 3)
            << ", b " << fmt(result.car_fit.free_fit.parameters[1], 4) << " +- "
            << fmt(result.car_fit.free_fit.uncertainties[1], 4) << "\n";
    summary << "CAR vs P constrained a/P: a " << fmt(result.car_fit.inverse_coefficient, 3)
            << " +- " << fmt(result.car_fit.inverse_coefficient_uncertainty, 3) << "\n";
  }
  std::cout << summary.str();

  const std::string csv_name = "power_scan." + g.format;
  spdc::io::write_power_scan(result, g.out_path(csv_name), g.table_format());
  std::ofstream(g.out_path("fit_summary.txt"), std::ios::binary) << summary.str();

  RunManifest manifest;
  manifest.command = "power-scan";
  add_common_parameters(manifest, g);
  add_detection_parameters(manifest, config);
  std::ostringstream plist;
  for (std::size_t i = 0; i < powers.size(); ++i) plist << (i ? "," : "") << fmt(powers[i], 4);
  manifest.parameters["powers_mw"] = plist.str();
  manifest.parameters["tau_ps"] = fmt(a.tau_ps, 2);
  manifest.parameters["window_ps"] = fmt(a.window_ps, 2);
  manifest.rng_seed = config.rng_seed;
  manifest.has_seed = true;
  manifest.outputs = {csv_name, "fit_summary.txt"};
  manifest.write(g.out_path("power_scan_manifest.json"));

  return ok >= 3 ? exit_ok : exit_runtime;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-pair source toolkit: birefringent phase matching and "
               "coincidence-counting simulation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--crystal", g.crystal_file, "crystal definition JSON file")
      ->check(CLI::ExistingFile);
  app.add_option("--pump-nm", g.pump_nm, "pump wavelength, nm")->capture_default_str();
  app.add_option("--output", g.output_dir, "output directory");
  app.add_option("--seed", g.seed, "rng seed for simulation commands")->capture_default_str();
  app.add_option("--format", g.format, "table format")
      ->check(CLI::IsMember({"csv", "tsv"}))
      ->capture_default_str();

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "print refractive indices at a wavelength");
  index_cmd->add_option("--lambda", index_args.lambda_nm, "wavelength, nm")->required();
  index_cmd->add_option("--theta-eff", index_args.theta_eff_deg,
                        "also evaluate n_e at this effective angle, deg");

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "sweep a stage angle and write the tuning curve");
  tune_cmd->add_option("--sweep", tune_args.sweep, "swept stage angle")
      ->check(CLI::IsMember({"theta", "phi"}))
      ->capture_default_str();
  tune_cmd->add_option("--from", tune_args.from_deg, "sweep start, deg (relative)")->required();
  tune_cmd->add_option("--to", tune_args.to_deg, "sweep stop, deg (relative)")->required();
  tune_cmd->add_option("--steps", tune_args.steps, "number of sweep points")
      ->capture_default_str();
  tune_cmd->add_option("--theta-offset", tune_args.theta_offset_deg,
                       "fixed theta offset while sweeping phi, deg");
  tune_cmd->add_option("--phi-offset", tune_args.phi_offset_deg,
                       "fixed phi offset while sweeping theta, deg");
  tune_cmd->add_option("--theta0", tune_args.theta0_deg, "reference polar tilt, deg")
      ->capture_default_str();
  tune_cmd->add_option("--phi0", tune_args.phi0_deg, "reference azimuthal tilt, deg")
      ->capture_default_str();
  tune_cmd->add_flag("--refraction", tune_args.refraction,
                     "convert stage offsets to internal tilts (Snell)");
  tune_cmd->add_flag("--plot", tune_args.plot, "also write an SVG plot");

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "find the angle for a target wavelength");
  solve_cmd->add_option("--signal", solve_args.signal_nm, "target signal wavelength, nm");
  solve_cmd->add_option("--idler", solve_args.idler_nm, "target idler wavelength, nm");
  solve_cmd->add_option("--theta0", solve_args.theta0_deg, "reference polar tilt, deg")
      ->capture_default_str();

  SimulateArgs simulate_args;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "generate signal/idler timestamp streams");
  add_detection_flags(simulate_cmd, simulate_args.config);
  simulate_cmd->add_option("--threads", simulate_args.threads, "worker threads")
      ->capture_default_str();

  AnalyzeArgs analyze_args;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "histogram and fit signal/idler timestamp files");
  analyze_cmd->add_option("files", analyze_args.files, "timestamp CSV/TSV files")
      ->required()
      ->expected(-1);
  analyze_cmd->add_option("--tau", analyze_args.tau_ps, "bin width, ps")->capture_default_str();
  analyze_cmd->add_option("--window", analyze_args.window_ps, "histogram halfwidth, ps")
      ->capture_default_str();
  analyze_cmd->add_option("--duration-s", analyze_args.duration_s,
                          "integration time override, s");

  PowerScanArgs scan_args;
  auto* scan_cmd =
      app.add_subcommand("power-scan", "simulate and analyze a pump-power series");
  scan_cmd->add_option("--powers", scan_args.powers_mw, "pump powers, mW")
      ->required()
      ->delimiter(',');
  add_detection_flags(scan_cmd, scan_args.config);
  scan_cmd->add_option("--tau", scan_args.tau_ps, "bin width, ps")->capture_default_str();
  scan_cmd->add_option("--window", scan_args.window_ps, "histogram halfwidth, ps")
      ->capture_default_str();
  scan_cmd->add_option("--threads", scan_args.threads, "worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (index_cmd->parsed()) return cmd_index(g, index_args);
    if (tune_cmd->parsed()) return cmd_tune(g, tune_args);
    if (solve_cmd->parsed()) return cmd_solve(g, solve_args);
    if (simulate_cmd->parsed()) return cmd_simulate(g, simulate_args);
    if (analyze_cmd->parsed()) return cmd_analyze(g, analyze_args);
    if (scan_cmd->parsed()) return cmd_power_scan(g, scan_args);
  } catch (const spdc::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const spdc::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_domain;
  } catch (const spdc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_usage;
}
