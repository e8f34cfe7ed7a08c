#include "spdc/pair_statistics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "spdc/errors.hpp"

namespace spdc {

namespace {

constexpr double ps_per_s = 1e12;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct SegmentEvents {
  std::vector<std::int64_t> signal;
  std::vector<std::int64_t> idler;
};

// One detection-time draw: emission time plus the arm's Gaussian jitter,
// rounded to integer picoseconds.
class ArmJitter {
public:
  explicit ArmJitter(double sigma_ps) : sigma_ps_(sigma_ps) {}
  template <class Rng>
  std::int64_t stamp(double emission_s, Rng& rng) {
    double t_ps = emission_s * ps_per_s;
    if (sigma_ps_ > 0.0) t_ps += sigma_ps_ * normal_(rng);
    return std::llround(t_ps);
  }

private:
  double sigma_ps_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

void apply_dead_time(std::vector<std::int64_t>& times, double dead_time_ps) {
  if (dead_time_ps <= 0.0 || times.empty()) return;
  const auto dead = static_cast<std::int64_t>(std::llround(dead_time_ps));
  std::size_t kept = 1;
  std::int64_t last = times.front();
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] - last >= dead) {
      times[kept++] = times[i];
      last = times[i];
    }
  }
  times.resize(kept);
}

} // namespace

std::uint64_t derive_subseed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
  return splitmix64(state);
}

void DetectionConfig::validate() const {
  if (!(pair_rate_per_mw >= 0.0)) throw UsageError("pair rate must be non-negative");
  if (!(pump_power_mw >= 0.0)) throw UsageError("pump power must be non-negative");
  if (!(eta_signal >= 0.0 && eta_signal <= 1.0) || !(eta_idler >= 0.0 && eta_idler <= 1.0))
    throw UsageError("detection efficiencies must lie in [0, 1]");
  if (!(dark_rate_signal >= 0.0) || !(dark_rate_idler >= 0.0))
    throw UsageError("dark rates must be non-negative");
  if (!(jitter_sigma_signal_ps >= 0.0) || !(jitter_sigma_idler_ps >= 0.0))
    throw UsageError("jitter sigmas must be non-negative");
  if (!(dead_time_ps >= 0.0)) throw UsageError("dead time must be non-negative");
  if (!(duration_s > 0.0)) throw UsageError("duration must be positive");
}

ExpectedCounts expected_counts(const DetectionConfig& config) {
  config.validate();
  const double rate = config.pair_rate();
  ExpectedCounts c;
  c.n1_cps = config.eta_signal * rate + config.dark_rate_signal;
  c.n2_cps = config.eta_idler * rate + config.dark_rate_idler;
  c.n12_cps = config.eta_signal * config.eta_idler * rate;
  return c;
}

double klyshko_pair_rate(double n1, double n2, double n12) {
  if (!(n12 > 0.0)) {
    std::ostringstream oss;
    oss << "pair-rate estimator N1*N2/N12 is undefined for N12 = " << n12;
    throw UndefinedEstimatorError(oss.str());
  }
  return n1 * n2 / n12;
}

double accidental_rate(double n1_cps, double n2_cps, double tau_ps) {
  if (!(tau_ps > 0.0)) throw UsageError("bin width tau must be positive");
  return n1_cps * n2_cps * tau_ps / ps_per_s;
}

double car(double n12_true_cps, double accidentals_in_window_cps) {
  if (accidentals_in_window_cps < 0.0)
    throw DomainError("accidental rate must be non-negative");
  if (accidentals_in_window_cps == 0.0)
    return std::numeric_limits<double>::infinity();
  return n12_true_cps / accidentals_in_window_cps;
}

std::pair<TimestampStream, TimestampStream>
simulate_timestamp_streams(const DetectionConfig& config, int threads) {
  config.validate();

  const double rate = config.pair_rate();
  const double detected_rate = rate * (config.eta_signal + config.eta_idler) +
                               config.dark_rate_signal + config.dark_rate_idler;
  const double expected_events = detected_rate * config.duration_s;
  if (expected_events > 1e9) {
    std::ostringstream oss;
    oss << "simulation would materialize about " << expected_events
        << " detection events (> 1e9); use a shorter duration or lower rates";
    throw ResourceLimitError(oss.str());
  }

  // Fixed one-second segments, each with a sub-seed derived from
  // (rng_seed, segment index): the merged result is independent of how many
  // threads execute the segments.
  const auto n_segments = static_cast<std::size_t>(std::ceil(config.duration_s));
  const double p_both = config.eta_signal * config.eta_idler;
  const double p_signal_only = config.eta_signal * (1.0 - config.eta_idler);
  const double p_idler_only = config.eta_idler * (1.0 - config.eta_signal);
  const auto duration_ps = static_cast<std::int64_t>(std::llround(config.duration_s * ps_per_s));

  std::vector<SegmentEvents> segments(n_segments);

  auto run_segment = [&](std::size_t index) {
    const double t0 = static_cast<double>(index);
    const double length = std::min(1.0, config.duration_s - t0);
    std::mt19937_64 rng(derive_subseed(config.rng_seed, index));
    std::uniform_real_distribution<double> uniform(0.0, length);
    ArmJitter signal_jitter(config.jitter_sigma_signal_ps);
    ArmJitter idler_jitter(config.jitter_sigma_idler_ps);

    auto poisson_count = [&](double mean) -> std::uint64_t {
      if (mean <= 0.0) return 0;
      std::poisson_distribution<std::uint64_t> dist(mean);
      return dist(rng);
    };
    // Pair emissions are thinned by detection efficiency before any event is
    // materialized: pairs seen by both arms, and singles seen by one arm only,
    // are three independent Poisson processes.
    const std::uint64_t n_both = poisson_count(rate * p_both * length);
    const std::uint64_t n_signal_only = poisson_count(rate * p_signal_only * length);
    const std::uint64_t n_idler_only = poisson_count(rate * p_idler_only * length);
    const std::uint64_t n_dark_signal = poisson_count(config.dark_rate_signal * length);
    const std::uint64_t n_dark_idler = poisson_count(config.dark_rate_idler * length);

    SegmentEvents& out = segments[index];
    out.signal.reserve(n_both + n_signal_only + n_dark_signal);
    out.idler.reserve(n_both + n_idler_only + n_dark_idler);

    auto keep = [&](std::int64_t t_ps, std::vector<std::int64_t>& dst) {
      if (t_ps >= 0 && t_ps <= duration_ps) dst.push_back(t_ps);
    };
    for (std::uint64_t k = 0; k < n_both; ++k) {
      const double t = t0 + uniform(rng);
      keep(signal_jitter.stamp(t, rng), out.signal);
      keep(idler_jitter.stamp(t, rng), out.idler);
    }
    for (std::uint64_t k = 0; k < n_signal_only; ++k)
      keep(signal_jitter.stamp(t0 + uniform(rng), rng), out.signal);
    for (std::uint64_t k = 0; k < n_idler_only; ++k)
      keep(idler_jitter.stamp(t0 + uniform(rng), rng), out.idler);
    for (std::uint64_t k = 0; k < n_dark_signal; ++k)
      keep(std::llround((t0 + uniform(rng)) * ps_per_s), out.signal);
    for (std::uint64_t k = 0; k < n_dark_idler; ++k)
      keep(std::llround((t0 + uniform(rng)) * ps_per_s), out.idler);
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < n_segments; ++i) run_segment(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < n_segments; i = next.fetch_add(1))
        run_segment(i);
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(threads, static_cast<int>(n_segments));
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  TimestampStream signal{Channel::signal, {}, config.duration_s};
  TimestampStream idler{Channel::idler, {}, config.duration_s};
  std::size_t total_signal = 0, total_idler = 0;
  for (const auto& seg : segments) {
    total_signal += seg.signal.size();
    total_idler += seg.idler.size();
  }
  signal.times_ps.reserve(total_signal);
  idler.times_ps.reserve(total_idler);
  for (const auto& seg : segments) {
    signal.times_ps.insert(signal.times_ps.end(), seg.signal.begin(), seg.signal.end());
    idler.times_ps.insert(idler.times_ps.end(), seg.idler.begin(), seg.idler.end());
  }
  std::sort(signal.times_ps.begin(), signal.times_ps.end());
  std::sort(idler.times_ps.begin(), idler.times_ps.end());
  apply_dead_time(signal.times_ps, config.dead_time_ps);
  apply_dead_time(idler.times_ps, config.dead_time_ps);
  return {std::move(signal), std::move(idler)};
}

CoincidenceHistogram histogram_delays(const TimestampStream& signal,
                                      const TimestampStream& idler, double tau_ps,
                                      double window_ps) {
  if (!(tau_ps > 0.0)) throw UsageError("bin width tau must be positive");
  const auto half_bins = static_cast<std::int64_t>(std::llround(window_ps / tau_ps));
  if (half_bins < 1 || std::abs(window_ps - static_cast<double>(half_bins) * tau_ps) >
                           1e-9 * tau_ps)
    throw UsageError("window must be a positive multiple of tau");

  CoincidenceHistogram hist;
  hist.bin_width_tau_ps = tau_ps;
  hist.window_ps = window_ps;
  hist.integration_time_s = std::max(signal.duration_s, idler.duration_s);
  hist.counts.assign(static_cast<std::size_t>(2 * half_bins + 1), 0);

  if (signal.times_ps.empty() || idler.times_ps.empty()) {
    hist.empty_warning = true;
    return hist;
  }

  const auto window = static_cast<std::int64_t>(std::llround(window_ps));
  std::size_t lo = 0;
  for (const std::int64_t s : signal.times_ps) {
    while (lo < idler.times_ps.size() && idler.times_ps[lo] < s - window) ++lo;
    for (std::size_t j = lo; j < idler.times_ps.size() && idler.times_ps[j] <= s + window;
         ++j) {
      const double delay = static_cast<double>(idler.times_ps[j] - s);
      const auto k = static_cast<std::int64_t>(std::llround(delay / tau_ps));
      if (k >= -half_bins && k <= half_bins)
        ++hist.counts[static_cast<std::size_t>(k + half_bins)];
    }
  }

  // Floor estimate. First guess from the outer quarter of the window, then a
  // moment-style peak width so that the sidebands start beyond 5x the width.
  const auto n_bins = hist.counts.size();
  double outer_sum = 0.0;
  std::size_t outer_n = 0;
  double total_sum = 0.0;
  std::int64_t max_count = 0;
  std::size_t max_at = 0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    total_sum += static_cast<double>(hist.counts[i]);
    if (std::abs(hist.delay_of_bin(i)) >= 0.75 * window_ps) {
      outer_sum += static_cast<double>(hist.counts[i]);
      ++outer_n;
    }
    if (hist.counts[i] > max_count) {
      max_count = hist.counts[i];
      max_at = i;
    }
  }
  const double floor0 = outer_n > 0 ? outer_sum / static_cast<double>(outer_n) : 0.0;

  const bool significant =
      static_cast<double>(max_count) - floor0 > 5.0 * std::sqrt(std::max(floor0, 1.0));
  if (!significant) {
    hist.has_peak = false;
    hist.accidental_floor_per_bin = total_sum / static_cast<double>(n_bins);
    hist.sideband_fwhm_estimate_ps = 0.0;
    return hist;
  }

  const double half_level = floor0 + 0.5 * (static_cast<double>(max_count) - floor0);
  std::size_t left = max_at, right = max_at;
  while (left > 0 && static_cast<double>(hist.counts[left - 1]) >= half_level) --left;
  while (right + 1 < n_bins && static_cast<double>(hist.counts[right + 1]) >= half_level)
    ++right;
  const double fwhm_est = static_cast<double>(right - left + 1) * tau_ps;

  double sideband_sum = 0.0;
  std::size_t sideband_n = 0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    if (std::abs(hist.delay_of_bin(i)) > 5.0 * fwhm_est) {
      sideband_sum += static_cast<double>(hist.counts[i]);
      ++sideband_n;
    }
  }
  hist.has_peak = true;
  hist.sideband_fwhm_estimate_ps = fwhm_est;
  hist.accidental_floor_per_bin =
      sideband_n > 0 ? sideband_sum / static_cast<double>(sideband_n) : floor0;
  return hist;
}

CoincidenceHistogram subtract_accidentals(const CoincidenceHistogram& hist) {
  CoincidenceHistogram out = hist;
  out.counts_corrected.resize(out.counts.size());
  for (std::size_t i = 0; i < out.counts.size(); ++i)
    out.counts_corrected[i] =
        static_cast<double>(out.counts[i]) - out.accidental_floor_per_bin;

  out.corrected_peak_area = 0.0;
  if (out.has_peak) {
    const double halfwidth = 2.5 * out.sideband_fwhm_estimate_ps;
    for (std::size_t i = 0; i < out.counts_corrected.size(); ++i)
      if (std::abs(out.delay_of_bin(i)) <= halfwidth)
        out.corrected_peak_area += out.counts_corrected[i];
  }
  return out;
}

PeakFit fit_coincidence_peak(const CoincidenceHistogram& hist) {
  if (hist.counts.empty()) throw DomainError("cannot fit an empty histogram");

  double area_above_floor = 0.0;
  std::vector<double> centers(hist.counts.size());
  std::vector<double> counts(hist.counts.size());
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    centers[i] = hist.delay_of_bin(i);
    counts[i] = static_cast<double>(hist.counts[i]);
    area_above_floor += std::max(counts[i] - hist.accidental_floor_per_bin, 0.0);
  }
  if (area_above_floor < 100.0) {
    std::ostringstream oss;
    oss << "peak area above the floor is " << area_above_floor
        << " counts; need at least 100 for a stable fit";
    throw DomainError(oss.str());
  }

  const auto fit =
      numerics::gaussian_fit(centers, counts, hist.accidental_floor_per_bin);
  PeakFit peak;
  peak.fit = fit;
  peak.center_ps = fit.parameters[1];
  peak.fwhm_ps = numerics::fwhm_from_sigma(fit.parameters[2]);
  peak.fwhm_error_ps = numerics::fwhm_from_sigma(fit.uncertainties[2]);
  peak.area_counts = fit.parameters[0] * fit.parameters[2] *
                     std::sqrt(2.0 * std::numbers::pi) / hist.bin_width_tau_ps;
  return peak;
}

PowerScanResult power_scan(const DetectionConfig& base, const std::vector<double>& powers_mw,
                           double tau_ps, double window_ps, int threads) {
  if (powers_mw.size() < 3)
    throw UsageError("power scan needs at least 3 pump powers");
  for (std::size_t i = 1; i < powers_mw.size(); ++i)
    if (!(powers_mw[i] > powers_mw[i - 1]))
      throw UsageError("pump powers must be strictly increasing");

  PowerScanResult result;
  result.points.reserve(powers_mw.size());

  for (std::size_t i = 0; i < powers_mw.size(); ++i) {
    PowerScanPoint point;
    point.power_mw = powers_mw[i];
    try {
      DetectionConfig config = base;
      config.pump_power_mw = powers_mw[i];
      config.rng_seed = derive_subseed(base.rng_seed, 0x5ca0 + i);

      const auto [signal, idler] = simulate_timestamp_streams(config, threads);
      const double t = config.duration_s;
      point.n1_raw_cps = static_cast<double>(signal.times_ps.size()) / t;
      point.n2_raw_cps = static_cast<double>(idler.times_ps.size()) / t;
      point.n1_cps = point.n1_raw_cps - config.dark_rate_signal;
      point.n2_cps = point.n2_raw_cps - config.dark_rate_idler;

      auto hist = subtract_accidentals(histogram_delays(signal, idler, tau_ps, window_ps));
      if (!hist.has_peak) {
        point.n12_cps = 0.0;
        point.note = "no coincidence peak";
      } else {
        point.n12_cps = hist.corrected_peak_area / t;
        double raw_area = 0.0;
        const double halfwidth = 2.5 * hist.sideband_fwhm_estimate_ps;
        for (std::size_t b = 0; b < hist.counts.size(); ++b)
          if (std::abs(hist.delay_of_bin(b)) <= halfwidth)
            raw_area += static_cast<double>(hist.counts[b]);
        point.n12_raw_cps = raw_area / t;

        const auto peak = fit_coincidence_peak(hist);
        const double window = car_window_ps(peak.fit.parameters[2]);
        const double accidentals_cps =
            hist.accidental_floor_per_bin * (window / tau_ps) / t;
        const double car_value = car(point.n12_cps, accidentals_cps);
        if (std::isfinite(car_value) && car_value > 0.0) {
          point.car = car_value;
          point.car_defined = true;
        } else {
          point.note = "CAR undefined (no accidental background)";
        }
      }
    } catch (const Error& e) {
      point.failed = true;
      point.note = e.what();
    }
    result.points.push_back(std::move(point));
  }

  std::vector<double> p_ok, n1_ok, n2_ok, n12_ok, p_car, car_ok;
  for (const auto& point : result.points) {
    if (point.failed) continue;
    p_ok.push_back(point.power_mw);
    n1_ok.push_back(point.n1_cps);
    n2_ok.push_back(point.n2_cps);
    n12_ok.push_back(point.n12_cps);
    if (point.car_defined) {
      p_car.push_back(point.power_mw);
      car_ok.push_back(point.car);
    }
  }
  if (p_ok.size() >= 2) {
    result.n1_fit = numerics::linear_fit(p_ok, n1_ok);
    result.n2_fit = numerics::linear_fit(p_ok, n2_ok);
    result.n12_fit = numerics::linear_fit(p_ok, n12_ok);
  }
  if (p_car.size() >= 2) {
    result.car_fit = numerics::power_law_fit(p_car, car_ok);
    result.car_fit_valid = true;
  }
  return result;
}

} // namespace spdc
