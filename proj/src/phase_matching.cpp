#include "spdc/phase_matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "spdc/errors.hpp"
#include "spdc/numerics.hpp"

namespace spdc {

namespace {

constexpr double deg_to_rad = std::numbers::pi / 180.0;
constexpr double rad_to_deg = 180.0 / std::numbers::pi;

// Upper end of the signal bracket, clamped so that both the signal and its
// idler stay inside the crystal validity range.
double clamped_lambda_max(const UniaxialCrystal& crystal, double lambda_pump_nm,
                          double lambda_max_nm) {
  double upper = std::min(lambda_max_nm, crystal.validity_max_nm());
  if (lambda_pump_nm < crystal.validity_min_nm()) {
    // idler(ls) = 1/(1/lp - 1/ls) falls below the validity floor for large ls
    const double limit = 1.0 / (1.0 / lambda_pump_nm - 1.0 / crystal.validity_min_nm());
    if (limit > 0.0) upper = std::min(upper, limit);
  }
  return upper;
}

} // namespace

void PumpConfig::validate(const UniaxialCrystal& crystal) const {
  if (!(lambda_nm > 0.0)) throw UsageError("pump wavelength must be positive");
  crystal.require_in_range(lambda_nm);
  crystal.require_in_range(2.0 * lambda_nm); // degenerate emission wavelength
  if (power_mw < 0.0) throw UsageError("pump power must be non-negative");
}

double idler_wavelength(double lambda_pump_nm, double lambda_signal_nm) {
  if (!(lambda_pump_nm > 0.0)) throw DomainError("pump wavelength must be positive");
  if (!(lambda_signal_nm > lambda_pump_nm)) {
    std::ostringstream oss;
    oss << "signal wavelength " << lambda_signal_nm
        << " nm must exceed the pump wavelength " << lambda_pump_nm << " nm";
    throw DomainError(oss.str());
  }
  return 1.0 / (1.0 / lambda_pump_nm - 1.0 / lambda_signal_nm);
}

double phase_mismatch(const UniaxialCrystal& crystal, double theta_eff_deg,
                      double lambda_pump_nm, double lambda_signal_nm) {
  const double lambda_idler_nm = idler_wavelength(lambda_pump_nm, lambda_signal_nm);
  const double n_pump = crystal.extraordinary_index_at_angle(theta_eff_deg, lambda_pump_nm);
  const double n_signal = crystal.ordinary_index(lambda_signal_nm);
  const double n_idler = crystal.ordinary_index(lambda_idler_nm);
  // 1e6 converts 1/nm to 1/mm.
  return 2.0 * std::numbers::pi * 1e6 *
         (n_pump / lambda_pump_nm - n_signal / lambda_signal_nm - n_idler / lambda_idler_nm);
}

PhaseMatchSolution solve_signal_wavelength(const UniaxialCrystal& crystal,
                                           double theta_eff_deg, double lambda_pump_nm,
                                           const SolverOptions& opts) {
  const double degenerate_nm = 2.0 * lambda_pump_nm;
  crystal.require_in_range(lambda_pump_nm);
  crystal.require_in_range(degenerate_nm);

  const double bracket_lo = degenerate_nm + opts.epsilon_nm;
  const double bracket_hi = clamped_lambda_max(crystal, lambda_pump_nm, opts.lambda_max_nm);
  if (!(bracket_hi > bracket_lo))
    throw UsageError("signal search bracket is empty; raise lambda_max_nm");

  auto mismatch = [&](double lambda_signal_nm) {
    return phase_mismatch(crystal, theta_eff_deg, lambda_pump_nm, lambda_signal_nm);
  };

  const double f_lo = mismatch(bracket_lo);
  const double f_hi = mismatch(bracket_hi);

  numerics::RootOptions root_opts;
  root_opts.tol_x = 1e-9; // nm; tol_f is the governing stop
  root_opts.tol_f = opts.tol_delta_k;
  root_opts.max_iter = opts.max_iter;

  auto make_solution = [&](double lambda_signal_nm, bool multi_root) {
    PhaseMatchSolution sol;
    sol.theta_eff_deg = theta_eff_deg;
    sol.lambda_signal_nm = lambda_signal_nm;
    sol.lambda_idler_nm = idler_wavelength(lambda_pump_nm, lambda_signal_nm);
    sol.delta_k_rad_per_mm = mismatch(lambda_signal_nm);
    sol.degenerate = (lambda_signal_nm - degenerate_nm) < opts.epsilon_nm;
    sol.multi_root_warning = multi_root;
    return sol;
  };

  if ((f_lo > 0.0) != (f_hi > 0.0) || f_lo == 0.0 || f_hi == 0.0) {
    // Coarse scan so that, should several crossings exist, we take the one
    // closest to degeneracy and warn.
    int crossings = 0;
    double seg_lo = bracket_lo, seg_hi = bracket_hi;
    double prev_x = bracket_lo, prev_f = f_lo;
    for (int i = 1; i <= opts.scan_points; ++i) {
      const double x = bracket_lo + (bracket_hi - bracket_lo) * i / opts.scan_points;
      const double fx = i == opts.scan_points ? f_hi : mismatch(x);
      if (prev_f * fx <= 0.0 && !(prev_f == 0.0 && fx == 0.0)) {
        ++crossings;
        if (crossings == 1) {
          seg_lo = prev_x;
          seg_hi = x;
        }
      }
      prev_x = x;
      prev_f = fx;
    }
    const double root =
        numerics::bracketed_root([&](double x) { return mismatch(x); }, seg_lo, seg_hi,
                                 root_opts);
    return make_solution(root, crossings > 1);
  }

  // No crossing above the degeneracy guard band; the root, if any, sits
  // within epsilon of the degenerate wavelength itself.
  const double f_deg = mismatch(degenerate_nm);
  if (f_deg == 0.0 || (f_deg > 0.0) != (f_lo > 0.0)) {
    const double root = numerics::bracketed_root([&](double x) { return mismatch(x); },
                                                 degenerate_nm, bracket_lo, root_opts);
    return make_solution(root, false);
  }
  if (std::abs(f_deg) <= opts.tol_delta_k) {
    return make_solution(degenerate_nm, false);
  }

  std::ostringstream oss;
  oss << "no phase match at this angle: theta_eff = " << theta_eff_deg
      << " deg, pump " << lambda_pump_nm << " nm; delta_k(" << bracket_lo
      << " nm) = " << f_lo << ", delta_k(" << bracket_hi << " nm) = " << f_hi
      << " rad/mm";
  throw NoPhaseMatchError(oss.str(), f_lo, f_hi);
}

double solve_phase_match_angle(const UniaxialCrystal& crystal, double lambda_signal_nm,
                               double lambda_pump_nm, const SolverOptions& opts) {
  const double degenerate_nm = 2.0 * lambda_pump_nm;
  const double lambda_max = clamped_lambda_max(crystal, lambda_pump_nm, opts.lambda_max_nm);
  if (!(lambda_signal_nm > degenerate_nm - opts.epsilon_nm) ||
      !(lambda_signal_nm < lambda_max)) {
    std::ostringstream oss;
    oss << "target signal wavelength " << lambda_signal_nm
        << " nm is outside the solvable range (" << degenerate_nm - opts.epsilon_nm << ", "
        << lambda_max << ") nm";
    throw DomainError(oss.str());
  }

  constexpr double angle_lo = 30.0;
  constexpr double angle_hi = 60.0;
  auto mismatch_at_angle = [&](double theta_eff_deg) {
    return phase_mismatch(crystal, theta_eff_deg, lambda_pump_nm, lambda_signal_nm);
  };

  const double f_lo = mismatch_at_angle(angle_lo);
  const double f_hi = mismatch_at_angle(angle_hi);
  if ((f_lo > 0.0) == (f_hi > 0.0) && f_lo != 0.0 && f_hi != 0.0) {
    // Report what the bracket can reach to make the error actionable.
    double reachable_lo = std::numeric_limits<double>::infinity();
    double reachable_hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 30; ++i) {
      const double theta = angle_lo + (angle_hi - angle_lo) * i / 30.0;
      try {
        const auto sol = solve_signal_wavelength(crystal, theta, lambda_pump_nm, opts);
        reachable_lo = std::min(reachable_lo, sol.lambda_signal_nm);
        reachable_hi = std::max(reachable_hi, sol.lambda_signal_nm);
      } catch (const NoPhaseMatchError&) {
      }
    }
    std::ostringstream oss;
    oss << "no effective angle in [" << angle_lo << ", " << angle_hi
        << "] deg phase-matches signal " << lambda_signal_nm << " nm";
    if (reachable_hi > 0.0)
      oss << "; achievable signal range is about [" << reachable_lo << ", " << reachable_hi
          << "] nm";
    throw DomainError(oss.str());
  }

  numerics::RootOptions root_opts;
  root_opts.tol_x = 1e-12; // degrees; drive on the mismatch itself
  root_opts.tol_f = 1e-9;  // rad/mm
  root_opts.max_iter = opts.max_iter;
  return numerics::bracketed_root(mismatch_at_angle, angle_lo, angle_hi, root_opts);
}

double stage_to_effective_angle_deg(const UniaxialCrystal& crystal, double lambda_pump_nm,
                                    const OrientationAngles& base, double dtheta_deg,
                                    double dphi_deg, bool refraction_correction) {
  auto effective = [&](double dtheta, double dphi) {
    OrientationAngles o = base;
    o.theta_deg = base.theta0_deg + dtheta;
    o.phi_deg = base.phi0_deg + dphi;
    return effective_angle_deg(o);
  };

  double theta_eff = effective(dtheta_deg, dphi_deg);
  if (!refraction_correction) return theta_eff;

  // The entrance face is normal to the pump at the reference orientation, so
  // the stage offsets are angles of incidence; convert them to internal
  // propagation tilts with the pump's own index, iterated to consistency.
  const double sin_dtheta = std::sin(dtheta_deg * deg_to_rad);
  const double sin_dphi = std::sin(dphi_deg * deg_to_rad);
  for (int iter = 0; iter < 64; ++iter) {
    const double n = crystal.extraordinary_index_at_angle(theta_eff, lambda_pump_nm);
    const double dtheta_int = std::asin(sin_dtheta / n) * rad_to_deg;
    const double dphi_int = std::asin(sin_dphi / n) * rad_to_deg;
    const double next = effective(dtheta_int, dphi_int);
    if (std::abs(next - theta_eff) < 1e-12) return next;
    theta_eff = next;
  }
  return theta_eff;
}

double refraction_internal_offset_deg(const UniaxialCrystal& crystal, double lambda_pump_nm,
                                      double theta0_deg, double external_offset_deg) {
  OrientationAngles base;
  base.theta0_deg = theta0_deg;
  base.phi0_deg = 0.0;
  base.theta_deg = theta0_deg;
  base.phi_deg = 0.0;
  const double theta_eff = stage_to_effective_angle_deg(crystal, lambda_pump_nm, base,
                                                        external_offset_deg, 0.0, true);
  return theta_eff - theta0_deg;
}

double refraction_external_offset_deg(const UniaxialCrystal& crystal, double lambda_pump_nm,
                                      double theta0_deg, double internal_offset_deg) {
  const double n = crystal.extraordinary_index_at_angle(theta0_deg + internal_offset_deg,
                                                        lambda_pump_nm);
  const double s = n * std::sin(internal_offset_deg * deg_to_rad);
  if (!(std::abs(s) <= 1.0)) {
    std::ostringstream oss;
    oss << "internal tilt " << internal_offset_deg
        << " deg has no external counterpart (n sin = " << s << ")";
    throw DomainError(oss.str());
  }
  return std::asin(s) * rad_to_deg;
}

TuningCurve sweep_tuning_curve(const UniaxialCrystal& crystal, const PumpConfig& pump,
                               const OrientationAngles& base, SweptParameter swept,
                               double start_deg, double stop_deg, int steps,
                               bool refraction_correction, const SolverOptions& opts) {
  if (steps <= 0) throw UsageError("sweep requires a positive step count");
  const bool zero_width = start_deg == stop_deg;
  if (!zero_width && steps < 2) throw UsageError("sweep over a nonzero range needs >= 2 steps");
  pump.validate(crystal);

  TuningCurve curve;
  curve.swept_parameter = swept;
  curve.refraction_corrected = refraction_correction;

  const int count = zero_width ? 1 : steps;
  curve.points.reserve(static_cast<std::size_t>(count));
  const double base_dtheta = base.theta_deg - base.theta0_deg;
  const double base_dphi = base.phi_deg - base.phi0_deg;

  for (int i = 0; i < count; ++i) {
    const double stage =
        zero_width ? start_deg : start_deg + (stop_deg - start_deg) * i / (steps - 1);
    const double dtheta = swept == SweptParameter::theta ? stage : base_dtheta;
    const double dphi = swept == SweptParameter::phi ? stage : base_dphi;

    TuningCurvePoint point;
    point.stage_angle_deg = stage;
    point.theta_eff_deg = stage_to_effective_angle_deg(crystal, pump.lambda_nm, base, dtheta,
                                                       dphi, refraction_correction);
    try {
      point.solution =
          solve_signal_wavelength(crystal, point.theta_eff_deg, pump.lambda_nm, opts);
    } catch (const NoPhaseMatchError&) {
      // gap, not an error
    }
    curve.points.push_back(point);
  }
  return curve;
}

std::size_t TuningCurve::matched_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(),
                    [](const TuningCurvePoint& p) { return p.solution.has_value(); }));
}

TuningRate tuning_rate(const TuningCurve& curve, Branch branch) {
  std::vector<const TuningCurvePoint*> matched;
  for (const auto& p : curve.points)
    if (p.solution) matched.push_back(&p);
  if (matched.size() < 2)
    throw DomainError("tuning_rate needs at least 2 phase-matched points");

  auto wavelength = [&](const TuningCurvePoint* p) {
    return branch == Branch::signal ? p->solution->lambda_signal_nm
                                    : p->solution->lambda_idler_nm;
  };

  TuningRate rate;
  rate.stage_span_deg = std::abs(matched.back()->stage_angle_deg - matched.front()->stage_angle_deg);
  rate.wavelength_span_nm = std::abs(wavelength(matched.back()) - wavelength(matched.front()));
  if (!(rate.wavelength_span_nm > 0.0))
    throw DomainError("tuning_rate: wavelength span of the branch is zero");
  rate.degrees_per_nm = rate.stage_span_deg / rate.wavelength_span_nm;

  rate.pointwise.reserve(matched.size() - 1);
  for (std::size_t i = 1; i < matched.size(); ++i) {
    const double da = matched[i]->stage_angle_deg - matched[i - 1]->stage_angle_deg;
    const double dl = wavelength(matched[i]) - wavelength(matched[i - 1]);
    rate.pointwise.push_back(da / dl);
  }
  return rate;
}

} // namespace spdc
