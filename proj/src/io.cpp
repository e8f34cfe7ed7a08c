#include "spdc/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spdc/errors.hpp"

namespace spdc::io {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary); // binary: byte-stable across platforms
  if (!out) throw UsageError("cannot open output file: " + path.string());
  return out;
}

std::string format_double(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

} // namespace

std::string fnv1a64_bytes(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read file for hashing: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64_bytes(buffer.str());
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["crystal_file_hash"] = crystal_file_hash;
  if (has_seed)
    j["rng_seed"] = rng_seed;
  else
    j["rng_seed"] = nullptr;
  j["tool_version"] = tool_version;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& path) const {
  auto out = open_for_write(path);
  out << to_json();
}

void write_tuning_curve(const TuningCurve& curve, const std::filesystem::path& path,
                        TableFormat format) {
  auto out = open_for_write(path);
  const char d = delimiter(format);
  out << "stage_angle_deg" << d << "theta_eff_deg" << d << "signal_nm" << d << "idler_nm"
      << d << "delta_k_rad_per_mm" << d << "degenerate\n";
  for (const auto& point : curve.points) {
    out << format_double("%.4f", point.stage_angle_deg) << d
        << format_double("%.4f", point.theta_eff_deg) << d;
    if (point.solution) {
      out << format_double("%.2f", point.solution->lambda_signal_nm) << d
          << format_double("%.2f", point.solution->lambda_idler_nm) << d
          << format_double("%.6e", point.solution->delta_k_rad_per_mm) << d
          << (point.solution->degenerate ? 1 : 0) << "\n";
    } else {
      out << d << d << d << "\n"; // gap row: empty wavelength fields
    }
  }
}

void write_timestamps(const TimestampStream& stream, const std::filesystem::path& path,
                      TableFormat format) {
  auto out = open_for_write(path);
  const char d = delimiter(format);
  out << "channel" << d << "time_ps\n";
  const int channel = static_cast<int>(stream.channel);
  for (const std::int64_t t : stream.times_ps) out << channel << d << t << "\n";
}

std::pair<TimestampStream, TimestampStream>
read_timestamps(const std::vector<std::filesystem::path>& paths) {
  TimestampStream signal{Channel::signal, {}, 0.0};
  TimestampStream idler{Channel::idler, {}, 0.0};

  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open timestamp file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::int64_t last_signal = std::numeric_limits<std::int64_t>::min();
    std::int64_t last_idler = std::numeric_limits<std::int64_t>::min();
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      if (line_no == 1) {
        if (line.find("channel") == std::string::npos)
          throw UsageError(path.string() + ":1: missing channel,time_ps header");
        continue;
      }
      const auto sep = line.find_first_of(",\t");
      if (sep == std::string::npos)
        throw UsageError(path.string() + ":" + std::to_string(line_no) +
                         ": expected two delimited fields");
      int channel = -1;
      std::int64_t time_ps = 0;
      try {
        channel = std::stoi(line.substr(0, sep));
        time_ps = std::stoll(line.substr(sep + 1));
      } catch (const std::exception&) {
        throw UsageError(path.string() + ":" + std::to_string(line_no) +
                         ": unparsable row '" + line + "'");
      }
      if (channel == 0) {
        if (time_ps < last_signal)
          throw UsageError(path.string() + ":" + std::to_string(line_no) +
                           ": signal timestamps are not sorted");
        last_signal = time_ps;
        signal.times_ps.push_back(time_ps);
      } else if (channel == 1) {
        if (time_ps < last_idler)
          throw UsageError(path.string() + ":" + std::to_string(line_no) +
                           ": idler timestamps are not sorted");
        last_idler = time_ps;
        idler.times_ps.push_back(time_ps);
      } else {
        throw UsageError(path.string() + ":" + std::to_string(line_no) +
                         ": channel must be 0 (signal) or 1 (idler)");
      }
    }
  }
  // Rows from separate files interleave; keep each channel sorted overall.
  std::sort(signal.times_ps.begin(), signal.times_ps.end());
  std::sort(idler.times_ps.begin(), idler.times_ps.end());
  std::int64_t max_ps = 0;
  if (!signal.times_ps.empty()) max_ps = std::max(max_ps, signal.times_ps.back());
  if (!idler.times_ps.empty()) max_ps = std::max(max_ps, idler.times_ps.back());
  signal.duration_s = idler.duration_s = static_cast<double>(max_ps) / 1e12;
  return {std::move(signal), std::move(idler)};
}

void write_histogram(const CoincidenceHistogram& hist, const std::filesystem::path& path,
                     TableFormat format) {
  auto out = open_for_write(path);
  const char d = delimiter(format);
  out << "delay_ps" << d << "counts" << d << "counts_corrected\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << format_double("%.0f", hist.delay_of_bin(i)) << d << hist.counts[i] << d;
    if (i < hist.counts_corrected.size())
      out << format_double("%.3f", hist.counts_corrected[i]);
    out << "\n";
  }
}

void write_power_scan(const PowerScanResult& result, const std::filesystem::path& path,
                      TableFormat format) {
  auto out = open_for_write(path);
  const char d = delimiter(format);
  out << "power_mw" << d << "n1_cps" << d << "n2_cps" << d << "n12_cps" << d << "car\n";
  for (const auto& point : result.points) {
    out << format_double("%.4f", point.power_mw) << d;
    if (point.failed) {
      out << d << d << d << "\n";
      continue;
    }
    out << format_double("%.3f", point.n1_cps) << d << format_double("%.3f", point.n2_cps)
        << d << format_double("%.3f", point.n12_cps) << d;
    if (point.car_defined) out << format_double("%.3f", point.car);
    out << "\n";
  }
}

void write_tuning_curve_svg(const TuningCurve& curve, const std::filesystem::path& path) {
  // Collect matched points per branch.
  std::vector<std::pair<double, double>> signal_pts, idler_pts;
  for (const auto& p : curve.points) {
    if (!p.solution) continue;
    signal_pts.emplace_back(p.stage_angle_deg, p.solution->lambda_signal_nm);
    idler_pts.emplace_back(p.stage_angle_deg, p.solution->lambda_idler_nm);
  }

  const double width = 640, height = 480, margin = 60;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (!signal_pts.empty()) {
    x_lo = x_hi = signal_pts.front().first;
    y_lo = y_hi = signal_pts.front().second;
    for (const auto* pts : {&signal_pts, &idler_pts}) {
      for (const auto& [x, y] : *pts) {
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
    if (x_hi == x_lo) x_hi = x_lo + 1;
    if (y_hi == y_lo) y_hi = y_lo + 1;
  }
  auto sx = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
  auto sy = [&](double y) {
    return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin);
  };
  auto polyline = [&](const std::vector<std::pair<double, double>>& pts, const char* color) {
    std::ostringstream oss;
    oss << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) oss << format_double("%.1f", sx(x)) << ','
                                       << format_double("%.1f", sy(y)) << ' ';
    oss << "\"/>\n";
    return oss.str();
  };

  auto out = open_for_write(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
      << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  if (!signal_pts.empty()) {
    out << polyline(signal_pts, "#c0392b");
    out << polyline(idler_pts, "#2980b9");
    out << "  <text x=\"" << width / 2 << "\" y=\"" << height - margin / 3
        << "\" text-anchor=\"middle\">stage angle (deg), range [" << format_double("%.2f", x_lo)
        << ", " << format_double("%.2f", x_hi) << "]</text>\n";
    out << "  <text x=\"" << margin / 3 << "\" y=\"" << height / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << margin / 3 << " "
        << height / 2 << ")\">wavelength (nm), range [" << format_double("%.1f", y_lo) << ", "
        << format_double("%.1f", y_hi) << "]</text>\n";
    out << "  <text x=\"" << width - margin - 10 << "\" y=\"" << margin
        << "\" text-anchor=\"end\" fill=\"#c0392b\">signal</text>\n";
    out << "  <text x=\"" << width - margin - 10 << "\" y=\"" << margin + 18
        << "\" text-anchor=\"end\" fill=\"#2980b9\">idler</text>\n";
  } else {
    out << "  <text x=\"" << width / 2 << "\" y=\"" << height / 2
        << "\" text-anchor=\"middle\">no phase-matched points</text>\n";
  }
  out << "</svg>\n";
}

} // namespace spdc::io
