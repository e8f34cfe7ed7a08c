#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spdc/pair_statistics.hpp"
#include "spdc/phase_matching.hpp"

namespace spdc::io {

inline constexpr const char* tool_version = "0.1.0";

enum class TableFormat { csv, tsv };

inline char delimiter(TableFormat f) { return f == TableFormat::csv ? ',' : '\t'; }

/// FNV-1a 64-bit hash of a file's bytes, hex encoded. Used to pin the crystal
/// data file in run manifests.
std::string fnv1a64_file(const std::filesystem::path& path);
std::string fnv1a64_bytes(const std::string& bytes);

/// Provenance record written next to every file-producing command's output.
/// Re-running a simulation command with the parameters recorded here
/// reproduces its outputs byte for byte.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> parameters; // resolved values, as text
  std::string crystal_file_hash;                 // "builtin:bbo" when no file given
  std::uint64_t rng_seed = 0;
  bool has_seed = false;
  std::string tool_version = io::tool_version;
  std::vector<std::string> outputs;

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// Tuning-curve table. Header:
///   stage_angle_deg,theta_eff_deg,signal_nm,idler_nm,delta_k_rad_per_mm,degenerate
/// Angles carry 4 decimals, wavelengths 2; gap rows leave the wavelength,
/// mismatch, and degenerate fields empty.
void write_tuning_curve(const TuningCurve& curve, const std::filesystem::path& path,
                        TableFormat format = TableFormat::csv);

/// Timestamp table with header channel,time_ps (0 = signal, 1 = idler),
/// times sorted within the channel.
void write_timestamps(const TimestampStream& stream, const std::filesystem::path& path,
                      TableFormat format = TableFormat::csv);

/// Parse one or more timestamp files and merge rows by channel. Throws
/// UsageError naming the file and line for malformed or unsorted input.
std::pair<TimestampStream, TimestampStream>
read_timestamps(const std::vector<std::filesystem::path>& paths);

/// Histogram table with header delay_ps,counts,counts_corrected.
void write_histogram(const CoincidenceHistogram& hist, const std::filesystem::path& path,
                     TableFormat format = TableFormat::csv);

/// Power-scan table with header power_mw,n1_cps,n2_cps,n12_cps,car.
void write_power_scan(const PowerScanResult& result, const std::filesystem::path& path,
                      TableFormat format = TableFormat::csv);

/// Minimal static SVG: wavelength branches of a tuning curve against the
/// swept stage angle.
void write_tuning_curve_svg(const TuningCurve& curve, const std::filesystem::path& path);

} // namespace spdc::io
