#pragma once

#include <optional>
#include <vector>

#include "spdc/crystal_optics.hpp"

namespace spdc {

struct PumpConfig {
  double lambda_nm = 266.0;
  double power_mw = 200.0; // reporting only

  /// Requires lambda and the degenerate wavelength 2*lambda to sit inside
  /// the crystal validity range.
  void validate(const UniaxialCrystal& crystal) const;
};

struct SolverOptions {
  double lambda_max_nm = 1400.0;  // upper end of the signal search bracket
  double epsilon_nm = 0.5;        // offset of the bracket above degeneracy
  double tol_delta_k = 1e-6;      // residual mismatch tolerance, rad/mm
  int max_iter = 200;
  int scan_points = 64;           // coarse scan used to pick the first sign change
};

struct PhaseMatchSolution {
  double theta_eff_deg = 0.0;
  double lambda_signal_nm = 0.0;
  double lambda_idler_nm = 0.0;
  double delta_k_rad_per_mm = 0.0; // residual mismatch at the solution
  bool degenerate = false;
  bool multi_root_warning = false;
};

enum class SweptParameter { theta, phi };
enum class Branch { signal, idler };

struct TuningCurvePoint {
  double stage_angle_deg = 0.0; // swept stage angle, relative to the reference
  double theta_eff_deg = 0.0;
  std::optional<PhaseMatchSolution> solution; // nullopt marks a gap
};

struct TuningCurve {
  SweptParameter swept_parameter = SweptParameter::theta;
  bool refraction_corrected = false;
  std::vector<TuningCurvePoint> points;

  std::size_t matched_count() const;
};

struct TuningRate {
  double stage_span_deg = 0.0;      // between first and last matched point
  double wavelength_span_nm = 0.0;  // of the requested branch
  double degrees_per_nm = 0.0;      // stage span / wavelength span
  std::vector<double> pointwise;    // finite-difference series, per interval
};

/// Energy conservation: 1/lambda_i = 1/lambda_p - 1/lambda_s.
/// Requires lambda_s > lambda_p.
double idler_wavelength(double lambda_pump_nm, double lambda_signal_nm);

/// Collinear scalar mismatch for a type-I process (extraordinary pump,
/// ordinary signal and idler):
///   dk = 2*pi * [ n_e(theta', lp)/lp - n_o(ls)/ls - n_o(li)/li ]  [rad/mm]
double phase_mismatch(const UniaxialCrystal& crystal, double theta_eff_deg,
                      double lambda_pump_nm, double lambda_signal_nm);

/// Signal wavelength solving dk = 0 at a fixed effective angle. The root is
/// searched on [2*lp + epsilon, lambda_max]; a root within epsilon of the
/// degenerate wavelength is flagged degenerate. Throws NoPhaseMatchError
/// (carrying the endpoint mismatch values) when no sign change exists.
PhaseMatchSolution solve_signal_wavelength(const UniaxialCrystal& crystal,
                                           double theta_eff_deg, double lambda_pump_nm,
                                           const SolverOptions& opts = {});

/// Effective angle at which the given signal wavelength is phase matched,
/// found by a monotone bracketed search over theta' in [30, 60] degrees.
double solve_phase_match_angle(const UniaxialCrystal& crystal, double lambda_signal_nm,
                               double lambda_pump_nm, const SolverOptions& opts = {});

/// Sweep one stage angle over [start, stop] degrees (relative to the
/// reference offsets in `base`) and phase-match each step. Steps without a
/// solution are recorded as gaps. With refraction_correction the stage
/// offsets are first converted to internal propagation tilts through
/// Snell's law at the entrance face, iterating n_e(theta', lambda_p).
TuningCurve sweep_tuning_curve(const UniaxialCrystal& crystal, const PumpConfig& pump,
                               const OrientationAngles& base, SweptParameter swept,
                               double start_deg, double stop_deg, int steps,
                               bool refraction_correction = false,
                               const SolverOptions& opts = {});

/// Ratio-style tuning rate: total stage span over total wavelength span of
/// the branch, plus the pointwise finite-difference series.
TuningRate tuning_rate(const TuningCurve& curve, Branch branch);

/// Effective angle for stage offsets (dtheta, dphi) from the reference
/// orientation, optionally converting the offsets to internal propagation
/// tilts first.
double stage_to_effective_angle_deg(const UniaxialCrystal& crystal, double lambda_pump_nm,
                                    const OrientationAngles& base, double dtheta_deg,
                                    double dphi_deg, bool refraction_correction);

/// Planar (phi = 0) Snell conversions between an external stage offset and
/// the internal pump tilt it produces. Exposed for tests and reporting.
double refraction_internal_offset_deg(const UniaxialCrystal& crystal, double lambda_pump_nm,
                                      double theta0_deg, double external_offset_deg);
double refraction_external_offset_deg(const UniaxialCrystal& crystal, double lambda_pump_nm,
                                      double theta0_deg, double internal_offset_deg);

} // namespace spdc
