#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spdc/numerics.hpp"

namespace spdc {

enum class Channel : int { signal = 0, idler = 1 };

/// Detection-chain model for a photon-pair measurement. Pairs are emitted as
/// a homogeneous Poisson process at pair_rate_per_mw * pump_power_mw; each
/// photon independently survives with its arm's efficiency; surviving
/// arrivals are Gaussian-jittered and merged with Poisson dark counts.
struct DetectionConfig {
  double pair_rate_per_mw = 6.48e6; // counts / s / mW
  double pump_power_mw = 1.0;
  double eta_signal = 5.57e-3;
  double eta_idler = 5.57e-3;
  double dark_rate_signal = 0.0; // counts / s
  double dark_rate_idler = 0.0;  // counts / s
  double jitter_sigma_signal_ps = 342.32;
  double jitter_sigma_idler_ps = 342.32;
  double dead_time_ps = 0.0; // non-paralyzable hold-off; 0 disables
  double duration_s = 60.0;
  std::uint64_t rng_seed = 1;

  double pair_rate() const { return pair_rate_per_mw * pump_power_mw; }
  void validate() const; // throws UsageError / DomainError
};

struct TimestampStream {
  Channel channel = Channel::signal;
  std::vector<std::int64_t> times_ps; // sorted, within [0, duration]
  double duration_s = 0.0;
};

struct CoincidenceHistogram {
  double bin_width_tau_ps = 100.0;
  double window_ps = 10000.0;             // histogram covers |delay| <= window
  std::vector<std::int64_t> counts;       // 2K+1 bins, bin k at delay (k-K)*tau
  std::vector<double> counts_corrected;   // filled by subtract_accidentals
  double integration_time_s = 0.0;
  double accidental_floor_per_bin = 0.0;  // estimated from the sidebands
  double sideband_fwhm_estimate_ps = 0.0; // moment estimate used for the sidebands
  bool has_peak = false;
  double corrected_peak_area = 0.0;       // counts, after subtraction
  bool empty_warning = false;

  std::int64_t half_bins() const { return (static_cast<std::int64_t>(counts.size()) - 1) / 2; }
  double delay_of_bin(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(half_bins())) * bin_width_tau_ps;
  }
};

struct PeakFit {
  double center_ps = 0.0;
  double fwhm_ps = 0.0;
  double fwhm_error_ps = 0.0;
  double area_counts = 0.0; // fitted Gaussian area in counts
  numerics::FitResult fit;  // parameters = {amplitude, center, sigma}
};

struct PowerScanPoint {
  double power_mw = 0.0;
  double n1_cps = 0.0;  // dark-subtracted singles
  double n2_cps = 0.0;
  double n12_cps = 0.0; // accidental-subtracted coincidences
  double n1_raw_cps = 0.0;
  double n2_raw_cps = 0.0;
  double n12_raw_cps = 0.0; // in-peak coincidences before subtraction
  double car = 0.0;
  bool car_defined = false;
  bool failed = false;
  std::string note;
};

struct PowerScanResult {
  std::vector<PowerScanPoint> points;
  numerics::FitResult n1_fit;  // vs pump power, {slope, intercept}
  numerics::FitResult n2_fit;
  numerics::FitResult n12_fit;
  numerics::PowerLawFit car_fit; // CAR vs pump power
  bool car_fit_valid = false;
};

/// Closed-form expected rates: N1 = eta1*R + d1, N2 = eta2*R + d2,
/// N12 = eta1*eta2*R, with R the generated pair rate.
struct ExpectedCounts {
  double n1_cps = 0.0;
  double n2_cps = 0.0;
  double n12_cps = 0.0;
};
ExpectedCounts expected_counts(const DetectionConfig& config);

/// Pair generation rate from singles and coincidences: N1*N2/N12.
/// Accepts rates or totals (totals give a total). Throws
/// UndefinedEstimatorError when n12 <= 0.
double klyshko_pair_rate(double n1, double n2, double n12);

/// Accidental coincidence rate per bin of width tau_ps: N1*N2*tau.
double accidental_rate(double n1_cps, double n2_cps, double tau_ps);

/// Coincidence-to-accidental ratio. Returns +infinity when the accidental
/// rate is zero (undefined background).
double car(double n12_true_cps, double accidentals_in_window_cps);

/// Window halfwidth convention used for CAR: peak center +/- 2 sigma.
inline double car_window_ps(double sigma_ps) { return 4.0 * sigma_ps; }

/// Monte Carlo realization of the detection model. Deterministic for a given
/// seed: the duration is cut into one-second segments, each driven by an rng
/// sub-seeded from (rng_seed, segment index), so results do not depend on
/// how many threads execute the segments.
std::pair<TimestampStream, TimestampStream>
simulate_timestamp_streams(const DetectionConfig& config, int threads = 1);

/// Histogram of idler-minus-signal delays for all pairs with
/// |delay| <= window_ps, bin width tau_ps (window must be a multiple of tau).
/// The accidental floor is estimated from bins beyond 5x the (moment
/// estimated) peak width.
CoincidenceHistogram histogram_delays(const TimestampStream& signal,
                                      const TimestampStream& idler, double tau_ps,
                                      double window_ps);

/// Per-bin floor subtraction. The raw counts are retained; the corrected
/// counts and the corrected peak area are filled in. Negative corrected bins
/// are kept.
CoincidenceHistogram subtract_accidentals(const CoincidenceHistogram& hist);

/// Gaussian fit of the floor-subtracted coincidence peak. Requires at least
/// 100 counts of peak area above the floor.
PeakFit fit_coincidence_peak(const CoincidenceHistogram& hist);

/// Simulate + analyze one configuration per pump power and fit the power
/// dependence of singles, coincidences, and CAR. Individual point failures
/// are recorded in the point, not thrown.
PowerScanResult power_scan(const DetectionConfig& base, const std::vector<double>& powers_mw,
                           double tau_ps, double window_ps, int threads = 1);

/// Deterministic sub-seed derivation (SplitMix64 over seed ^ f(index)).
std::uint64_t derive_subseed(std::uint64_t seed, std::uint64_t index);

} // namespace spdc
