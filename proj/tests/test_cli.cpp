#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "spdc_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run_cli(const std::string& args) {
  static int invocation = 0;
  const auto out_file = work_dir() / ("out" + std::to_string(invocation) + ".txt");
  const auto err_file = work_dir() / ("err" + std::to_string(invocation) + ".txt");
  ++invocation;

  const std::string cmd = std::string(SPDC_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_file);
  result.err = slurp(err_file);
  return result;
}

double parse_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size()));
}

} // namespace

TEST_CASE("index prints both principal indices") {
  const auto r = run_cli("index --lambda 532");
  CHECK(r.exit_code == 0);
  CHECK(parse_after(r.out, "n_o: ") == doctest::Approx(1.674213).epsilon(1e-6));
  CHECK(parse_after(r.out, "n_e_principal: ") == doctest::Approx(1.554659).epsilon(1e-6));
}

TEST_CASE("index at zero effective angle flags the ordinary limit") {
  const auto r = run_cli("index --lambda 266 --theta-eff 0");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("[ordinary limit]") != std::string::npos);
  CHECK(parse_after(r.out, "n_e(theta_eff=0.0000 deg): ") ==
        doctest::Approx(1.758525).epsilon(1e-6));
}

TEST_CASE("index rejects wavelengths outside the crystal validity range") {
  const auto r = run_cli("index --lambda 50");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("below the BBO validity bound") != std::string::npos);
}

TEST_CASE("index accepts an explicit crystal file") {
  const auto r = run_cli(std::string("index --crystal ") + SPDC_CRYSTAL_FILE + " --lambda 532");
  CHECK(r.exit_code == 0);
  CHECK(parse_after(r.out, "n_o: ") == doctest::Approx(1.674213).epsilon(1e-6));
}

TEST_CASE("solve reproduces the reference operating angle") {
  const auto r = run_cli("solve --signal 904");
  CHECK(r.exit_code == 0);
  CHECK(parse_after(r.out, "theta_eff: ") == doctest::Approx(42.7).epsilon(0.5 / 42.7));
}

TEST_CASE("solve lists the azimuthal route to degeneracy") {
  const auto r = run_cli("solve --signal 532");
  CHECK(r.exit_code == 0);
  CHECK(parse_after(r.out, "theta_eff: ") == doctest::Approx(47.63).epsilon(1e-3));
  // A stage pair near (46.7, 10.7) must appear among the listed solutions.
  const std::regex pair_re(R"(theta = 46\.70, phi = (10\.\d+))");
  std::smatch m;
  REQUIRE(std::regex_search(r.out, m, pair_re));
  CHECK(std::stod(m[1]) == doctest::Approx(10.7).epsilon(0.02));
}

TEST_CASE("solve exits with a domain failure for unreachable targets") {
  const auto r = run_cli("solve --signal 300");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("outside the solvable range") != std::string::npos);

  CHECK(run_cli("solve").exit_code == 2);
  CHECK(run_cli("solve --signal 904 --idler 377").exit_code == 2);
}

TEST_CASE("solve accepts an idler-side target") {
  const auto r = run_cli("solve --idler 377");
  CHECK(r.exit_code == 0);
  CHECK(parse_after(r.out, "target signal: ") == doctest::Approx(903.44).epsilon(1e-3));
}

TEST_CASE("tune rejects a zero-step sweep") {
  CHECK(run_cli("tune --from -1 --to 1 --steps 0").exit_code == 2);
}

TEST_CASE("an all-gap sweep warns and still writes an empty-data table") {
  const auto dir = work_dir() / "allgap";
  const auto r = run_cli("tune --sweep theta --from 6 --to 8 --steps 5 --output " +
                         dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("no phase-matched points") != std::string::npos);
  const auto csv = slurp(dir / "tuning_curve.csv");
  CHECK(csv.find("stage_angle_deg,theta_eff_deg,signal_nm") == 0);
  CHECK(csv.find(",,,,") != std::string::npos);
}

TEST_CASE("tune writes curve, plot, and manifest") {
  const auto dir = work_dir() / "tune1";
  const auto r = run_cli("tune --sweep theta --from -6 --to 8.5 --steps 30 --refraction "
                         "--plot --output " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "tuning_curve.csv"));
  CHECK(fs::exists(dir / "tuning_curve.svg"));

  const auto manifest = json::parse(slurp(dir / "tune_manifest.json"));
  CHECK(manifest["command"] == "tune");
  CHECK(manifest["crystal_file_hash"] == "builtin:bbo");
  CHECK(manifest["parameters"]["refraction_correction"] == "true");
  CHECK(manifest["tool_version"] == "0.1.0");

  // The sweep spans signal wavelengths on both sides of the 904 nm point.
  const auto csv = slurp(dir / "tuning_curve.csv");
  CHECK(csv.find("degenerate") != std::string::npos);
  double lo = 1e9, hi = 0.0;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line); // header
  while (std::getline(lines, line)) {
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    std::getline(ss, field, ',');
    std::getline(ss, field, ',');
    if (field.empty()) continue;
    lo = std::min(lo, std::stod(field));
    hi = std::max(hi, std::stod(field));
  }
  CHECK(lo < 650.0);
  CHECK(hi > 1050.0);
}

TEST_CASE("tsv output uses tab delimiters") {
  const auto dir = work_dir() / "tsv";
  const auto r = run_cli("tune --from -1 --to 1 --steps 3 --format tsv --output " +
                         dir.string());
  CHECK(r.exit_code == 0);
  const auto tsv = slurp(dir / "tuning_curve.tsv");
  CHECK(tsv.find("stage_angle_deg\ttheta_eff_deg") == 0);
}

TEST_CASE("simulate is bit-reproducible per seed and across thread counts") {
  const auto a = work_dir() / "sim_a";
  const auto b = work_dir() / "sim_b";
  const auto c = work_dir() / "sim_c";
  const std::string flags = "simulate --duration 0.5 --seed 5 ";
  CHECK(run_cli(flags + "--output " + a.string()).exit_code == 0);
  CHECK(run_cli(flags + "--output " + b.string()).exit_code == 0);
  CHECK(run_cli(flags + "--threads 4 --output " + c.string()).exit_code == 0);

  const auto sig_a = slurp(a / "signal_timestamps.csv");
  CHECK(!sig_a.empty());
  CHECK(sig_a == slurp(b / "signal_timestamps.csv"));
  CHECK(sig_a == slurp(c / "signal_timestamps.csv"));
  CHECK(slurp(a / "idler_timestamps.csv") == slurp(b / "idler_timestamps.csv"));
  CHECK(slurp(a / "idler_timestamps.csv") == slurp(c / "idler_timestamps.csv"));

  const auto manifest = json::parse(slurp(a / "simulate_manifest.json"));
  CHECK(manifest["rng_seed"] == 5);
  CHECK(manifest["command"] == "simulate");

  // A different seed must give different data.
  const auto d = work_dir() / "sim_d";
  CHECK(run_cli("simulate --duration 0.5 --seed 6 --output " + d.string()).exit_code == 0);
  CHECK(sig_a != slurp(d / "signal_timestamps.csv"));
}

TEST_CASE("simulate with a zero pair rate produces dark-count-only streams") {
  const auto dir = work_dir() / "darks";
  const auto r = run_cli("simulate --pair-rate 0 --dark-signal 2000 --dark-idler 2000 "
                         "--duration 0.5 --seed 2 --output " + dir.string());
  CHECK(r.exit_code == 0);
  const auto csv = slurp(dir / "signal_timestamps.csv");
  CHECK(csv.find("channel,time_ps") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') > 800); // ~1000 dark counts
}

TEST_CASE("analyze round-trips simulate output") {
  const auto dir = work_dir() / "roundtrip";
  REQUIRE(run_cli("simulate --duration 2 --seed 9 --output " + dir.string()).exit_code == 0);
  const auto r = run_cli("analyze " + (dir / "signal_timestamps.csv").string() + " " +
                         (dir / "idler_timestamps.csv").string() + " --duration-s 2 --output " +
                         dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("peak fwhm:") != std::string::npos);
  CHECK(r.out.find("klyshko pair rate:") != std::string::npos);
  const auto hist = slurp(dir / "histogram.csv");
  CHECK(hist.find("delay_ps,counts,counts_corrected") == 0);
  CHECK(fs::exists(dir / "fit_report.txt"));
  CHECK(fs::exists(dir / "analyze_manifest.json"));

  const double fwhm = parse_after(r.out, "peak fwhm: ");
  CHECK(fwhm > 800.0);
  CHECK(fwhm < 1500.0);
}

TEST_CASE("analyze warns on an empty stream") {
  const auto dir = work_dir() / "empty";
  fs::create_directories(dir);
  std::ofstream(dir / "signal.csv") << "channel,time_ps\n0,100\n0,2100\n0,5100\n";
  std::ofstream(dir / "idler.csv") << "channel,time_ps\n";
  const auto r = run_cli("analyze " + (dir / "signal.csv").string() + " " +
                         (dir / "idler.csv").string() + " --output " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("empty") != std::string::npos);
}

TEST_CASE("analyze rejects malformed and unsorted files naming the line") {
  const auto dir = work_dir() / "bad";
  fs::create_directories(dir);
  std::ofstream(dir / "malformed.csv") << "channel,time_ps\n0,100\nnot a row\n";
  auto r = run_cli("analyze " + (dir / "malformed.csv").string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find(":3:") != std::string::npos);

  std::ofstream(dir / "unsorted.csv") << "channel,time_ps\n0,500\n0,100\n";
  r = run_cli("analyze " + (dir / "unsorted.csv").string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("not sorted") != std::string::npos);
  CHECK(r.err.find(":3:") != std::string::npos);
}

TEST_CASE("flat correlations give a CAR near one against the floor") {
  const auto dir = work_dir() / "flatcar";
  REQUIRE(run_cli("simulate --pair-rate 0 --dark-signal 50000 --dark-idler 50000 "
                  "--duration 2 --seed 3 --output " + dir.string()).exit_code == 0);
  const auto r = run_cli("analyze " + (dir / "signal_timestamps.csv").string() + " " +
                         (dir / "idler_timestamps.csv").string() + " --duration-s 2");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("no significant coincidence peak") != std::string::npos);
  const double flat_car = parse_after(r.out, "CAR (central bins vs floor): ");
  CHECK(flat_car == doctest::Approx(1.0).epsilon(0.5));
}

TEST_CASE("power-scan usage and outputs") {
  CHECK(run_cli("power-scan --powers 1").exit_code == 2);

  const auto dir = work_dir() / "scan";
  const auto r = run_cli("power-scan --powers 0.5,1,2 --pair-rate 2000000 "
                         "--eta-signal 0.05 --eta-idler 0.05 --duration 1 --seed 4 "
                         "--window 20000 --output " + dir.string());
  CHECK(r.exit_code == 0);
  const auto csv = slurp(dir / "power_scan.csv");
  CHECK(csv.find("power_mw,n1_cps,n2_cps,n12_cps,car") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4); // header + 3 points
  const auto summary = slurp(dir / "fit_summary.txt");
  CHECK(summary.find("N12 vs P") != std::string::npos);
  CHECK(summary.find("power law") != std::string::npos);
  CHECK(fs::exists(dir / "power_scan_manifest.json"));
}

TEST_CASE("unknown arguments exit with the usage code") {
  CHECK(run_cli("index --lambda 532 --no-such-flag").exit_code == 2);
  CHECK(run_cli("no-such-command").exit_code == 2);
}
