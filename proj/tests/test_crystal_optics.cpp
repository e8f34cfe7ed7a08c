#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "spdc/crystal_optics.hpp"
#include "spdc/errors.hpp"

using namespace spdc;

namespace {

constexpr double deg = std::numbers::pi / 180.0;

// Elementary rotations, assembled in the test itself so the library matrices
// are checked against an independent construction.
std::array<std::array<double, 3>, 3> rot_x(double a) {
  return {{{1, 0, 0}, {0, std::cos(a), -std::sin(a)}, {0, std::sin(a), std::cos(a)}}};
}
std::array<std::array<double, 3>, 3> rot_y(double a) {
  return {{{std::cos(a), 0, std::sin(a)}, {0, 1, 0}, {-std::sin(a), 0, std::cos(a)}}};
}
std::array<std::array<double, 3>, 3> rot_z(double a) {
  return {{{std::cos(a), -std::sin(a), 0}, {std::sin(a), std::cos(a), 0}, {0, 0, 1}}};
}
std::array<std::array<double, 3>, 3> mul(const std::array<std::array<double, 3>, 3>& a,
                                         const std::array<std::array<double, 3>, 3>& b) {
  std::array<std::array<double, 3>, 3> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

} // namespace

TEST_CASE("ordinary index matches direct dispersion evaluation") {
  const auto bbo = UniaxialCrystal::bbo();
  CHECK(bbo.ordinary_index(532.0) == doctest::Approx(1.6742127206201252).epsilon(1e-12));
  CHECK(bbo.ordinary_index(266.0) == doctest::Approx(1.758525270720278).epsilon(1e-12));
}

TEST_CASE("out-of-range wavelengths name the violated bound") {
  const auto bbo = UniaxialCrystal::bbo();
  CHECK_THROWS_WITH_AS(bbo.ordinary_index(100.0),
                       doctest::Contains("below the BBO validity bound of 205"), DomainError);
  CHECK_THROWS_WITH_AS(bbo.principal_extraordinary_index(5000.0),
                       doctest::Contains("above the BBO validity bound of 3500"), DomainError);
}

TEST_CASE("principal extraordinary index and negative uniaxial ordering") {
  const auto bbo = UniaxialCrystal::bbo();
  CHECK(bbo.principal_extraordinary_index(266.0) ==
        doctest::Approx(1.6126170010403817).epsilon(1e-12));
  CHECK(bbo.principal_extraordinary_index(532.0) < bbo.ordinary_index(532.0));
  CHECK(bbo.is_negative_uniaxial());
}

TEST_CASE("angle-dependent extraordinary index endpoints and interior value") {
  const auto bbo = UniaxialCrystal::bbo();
  CHECK(bbo.extraordinary_index_at_angle(0.0, 266.0) ==
        doctest::Approx(bbo.ordinary_index(266.0)).epsilon(1e-13));
  CHECK(bbo.extraordinary_index_at_angle(90.0, 266.0) ==
        doctest::Approx(bbo.principal_extraordinary_index(266.0)).epsilon(1e-13));

  const double mid = bbo.extraordinary_index_at_angle(42.7, 266.0);
  CHECK(mid == doctest::Approx(1.6866939035048347).epsilon(1e-12));
  CHECK(mid < bbo.ordinary_index(266.0));
  CHECK(mid > bbo.principal_extraordinary_index(266.0));

  CHECK_THROWS_AS(bbo.extraordinary_index_at_angle(-1.0, 266.0), DomainError);
  CHECK_THROWS_AS(bbo.extraordinary_index_at_angle(90.5, 266.0), DomainError);
}

TEST_CASE("index-ellipsoid endpoint identities over random wavelengths") {
  const auto bbo = UniaxialCrystal::bbo();
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> lambda(205.0, 3500.0);
  for (int i = 0; i < 100; ++i) {
    const double l = lambda(rng);
    const double no = bbo.ordinary_index(l);
    const double ne = bbo.principal_extraordinary_index(l);
    CHECK(std::abs(bbo.extraordinary_index_at_angle(0.0, l) - no) / no <= 1e-12);
    CHECK(std::abs(bbo.extraordinary_index_at_angle(90.0, l) - ne) / ne <= 1e-12);
  }
}

TEST_CASE("extraordinary index decreases strictly with the effective angle") {
  const auto bbo = UniaxialCrystal::bbo();
  for (const double l : {266.0, 532.0, 800.0, 1500.0, 3000.0}) {
    double prev = bbo.extraordinary_index_at_angle(0.0, l);
    for (int a = 1; a <= 90; ++a) {
      const double cur = bbo.extraordinary_index_at_angle(static_cast<double>(a), l);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("effective angle basics") {
  OrientationAngles o;
  o.theta_deg = 42.7;
  o.phi_deg = 0.0;
  CHECK(effective_angle_deg(o) == doctest::Approx(42.7).epsilon(1e-12));

  o.theta_deg = 0.0;
  CHECK(effective_angle_deg(o) == doctest::Approx(0.0).scale(1.0));

  o.theta_deg = 46.7;
  o.phi_deg = 10.7;
  CHECK(effective_angle_deg(o) == doctest::Approx(47.63168681550355).epsilon(1e-12));

  o.theta_deg = 90.0;
  CHECK_THROWS_AS(effective_angle_deg(o), DomainError);
  o.theta_deg = 30.0;
  o.phi_deg = -95.0;
  CHECK_THROWS_AS(effective_angle_deg(o), DomainError);
}

TEST_CASE("effective angle is symmetric in theta and phi and ignores gamma") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> angle(-80.0, 80.0);
  std::uniform_real_distribution<double> gamma(-360.0, 360.0);
  for (int i = 0; i < 100; ++i) {
    OrientationAngles a;
    a.theta_deg = angle(rng);
    a.phi_deg = angle(rng);
    OrientationAngles b = a;
    std::swap(b.theta_deg, b.phi_deg);
    CHECK(effective_angle_deg(a) == doctest::Approx(effective_angle_deg(b)).epsilon(1e-13));

    const double reference = effective_angle_deg(a);
    a.gamma_deg = gamma(rng);
    CHECK(effective_angle_deg(a) == reference);
    // The rotated optic axis agrees: its z component is cos(theta') for any gamma.
    const auto axis = optic_axis_direction(a);
    CHECK(axis[2] == doctest::Approx(std::cos(reference * deg)).epsilon(1e-12));
  }
}

TEST_CASE("rotation matrices at zero angles are the identity") {
  for (const auto order : {RotationOrder::XYZ, RotationOrder::YXZ}) {
    OrientationAngles o;
    o.theta_deg = o.phi_deg = o.gamma_deg = 0.0;
    o.order = order;
    const auto r = rotation_matrix(o);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(r(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-15));
  }
}

TEST_CASE("rotation matrices equal the product of elementary rotations") {
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = trial == 0 ? 30.0 : angle(rng);
    const double p = trial == 0 ? 20.0 : angle(rng);
    const double g = trial == 0 ? 10.0 : angle(rng);

    OrientationAngles o;
    o.theta_deg = t;
    o.phi_deg = p;
    o.gamma_deg = g;

    o.order = RotationOrder::XYZ;
    const auto xyz = rotation_matrix(o);
    const auto xyz_oracle = mul(rot_z(g * deg), mul(rot_y(p * deg), rot_x(t * deg)));
    o.order = RotationOrder::YXZ;
    const auto yxz = rotation_matrix(o);
    const auto yxz_oracle = mul(rot_z(g * deg), mul(rot_x(t * deg), rot_y(p * deg)));

    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        CHECK(xyz(i, j) == doctest::Approx(xyz_oracle[i][j]).scale(1.0).epsilon(1e-14));
        CHECK(yxz(i, j) == doctest::Approx(yxz_oracle[i][j]).scale(1.0).epsilon(1e-14));
      }
  }
}

TEST_CASE("rotation matrices are orthogonal with unit determinant") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  for (int trial = 0; trial < 1000; ++trial) {
    OrientationAngles o;
    o.theta_deg = angle(rng);
    o.phi_deg = angle(rng);
    o.gamma_deg = angle(rng);
    o.order = trial % 2 == 0 ? RotationOrder::XYZ : RotationOrder::YXZ;

    const auto r = rotation_matrix(o);
    const auto rtr = r.transposed() * r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-12);
    CHECK(std::abs(r.determinant() - 1.0) <= 1e-12);
  }
}

TEST_CASE("entry (3,3) is cos(theta)cos(phi) for both rotation orders") {
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  for (int trial = 0; trial < 1000; ++trial) {
    OrientationAngles o;
    o.theta_deg = angle(rng);
    o.phi_deg = angle(rng);
    o.gamma_deg = angle(rng);

    o.order = RotationOrder::XYZ;
    const double xyz_33 = rotation_matrix(o)(2, 2);
    o.order = RotationOrder::YXZ;
    const double yxz_33 = rotation_matrix(o)(2, 2);
    const double expected = std::cos(o.theta_deg * deg) * std::cos(o.phi_deg * deg);
    CHECK(std::abs(xyz_33 - yxz_33) <= 1e-12);
    CHECK(std::abs(xyz_33 - expected) <= 1e-12);
  }
}

TEST_CASE("optic axis direction") {
  OrientationAngles o;
  o.theta_deg = o.phi_deg = o.gamma_deg = 0.0;
  auto axis = optic_axis_direction(o);
  CHECK(axis[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(axis[1] == doctest::Approx(0.0).scale(1.0));
  CHECK(axis[2] == doctest::Approx(1.0));

  o.theta_deg = 42.7;
  axis = optic_axis_direction(o);
  CHECK(axis[2] == doctest::Approx(std::cos(42.7 * deg)).epsilon(1e-13));

  o.theta_deg = 46.7;
  o.phi_deg = 10.7;
  axis = optic_axis_direction(o);
  CHECK(axis[2] == doctest::Approx(std::cos(47.63168681550355 * deg)).epsilon(1e-12));
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  CHECK(std::abs(norm - 1.0) <= 1e-12);
}

TEST_CASE("crystal JSON files round-trip against the builtin data") {
  const auto dir = std::filesystem::temp_directory_path() / "spdc_crystal_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "bbo_copy.json";
  {
    std::ofstream out(path);
    out << R"({
      "name": "BBO",
      "validity_range_nm": [205.0, 3500.0],
      "ordinary": {"A": 2.7359, "B": 0.01878, "C_um2": 0.01822, "D_per_um2": 0.01354},
      "extraordinary": {"A": 2.3753, "B": 0.01224, "C_um2": 0.01667, "D_per_um2": 0.01516}
    })";
  }
  const auto loaded = UniaxialCrystal::from_json_file(path);
  const auto builtin = UniaxialCrystal::bbo();
  CHECK(loaded.name() == builtin.name());
  for (const double l : {266.0, 532.0, 904.0, 1500.0}) {
    CHECK(loaded.ordinary_index(l) == builtin.ordinary_index(l));
    CHECK(loaded.principal_extraordinary_index(l) == builtin.principal_extraordinary_index(l));
  }

  const auto bad_json = dir / "broken.json";
  std::ofstream(bad_json) << "{ not json";
  CHECK_THROWS_AS(UniaxialCrystal::from_json_file(bad_json), UsageError);

  const auto missing_field = dir / "missing.json";
  std::ofstream(missing_field) << R"({"name": "X", "validity_range_nm": [205, 3500]})";
  CHECK_THROWS_AS(UniaxialCrystal::from_json_file(missing_field), UsageError);

  CHECK_THROWS_AS(UniaxialCrystal::from_json_file(dir / "does_not_exist.json"), UsageError);
}

TEST_CASE("crystal validation rejects models that violate their own range") {
  // n^2 dips below 1 inside the claimed range.
  CHECK_THROWS_AS(UniaxialCrystal("bad", SellmeierSet{0.5, 0.01, 0.001, 0.0},
                                  SellmeierSet{2.3, 0.01, 0.001, 0.0}, 205.0, 3500.0),
                  DomainError);
  // Range crosses the Sellmeier pole.
  CHECK_THROWS_AS(UniaxialCrystal("bad", SellmeierSet{2.7, 0.02, 0.09, 0.0},
                                  SellmeierSet{2.3, 0.01, 0.001, 0.0}, 205.0, 3500.0),
                  DomainError);
  CHECK_THROWS_AS(UniaxialCrystal("bad", SellmeierSet{2.7, 0.02, 0.001, 0.0},
                                  SellmeierSet{2.3, 0.01, 0.001, 0.0}, 3500.0, 205.0),
                  UsageError);
}
