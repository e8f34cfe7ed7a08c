#include "spdc/crystal_optics.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spdc/errors.hpp"

namespace spdc {

namespace {

constexpr double deg_to_rad = std::numbers::pi / 180.0;

double checked_sqrt_index(double n2, double lambda_nm, const std::string& which) {
  if (!(n2 > 1.0)) {
    std::ostringstream oss;
    oss << "dispersion model gives n^2 = " << n2 << " <= 1 for the " << which
        << " index at " << lambda_nm << " nm";
    throw DomainError(oss.str());
  }
  return std::sqrt(n2);
}

} // namespace

double SellmeierSet::n_squared(double lambda_um) const {
  const double l2 = lambda_um * lambda_um;
  if (!(l2 > C_um2)) {
    std::ostringstream oss;
    oss << "Sellmeier form undefined: lambda^2 = " << l2 << " um^2 must exceed C = "
        << C_um2 << " um^2";
    throw DomainError(oss.str());
  }
  return A + B_um2 / (l2 - C_um2) - D_per_um2 * l2;
}

UniaxialCrystal::UniaxialCrystal(std::string name, SellmeierSet ordinary,
                                 SellmeierSet extraordinary, double validity_min_nm,
                                 double validity_max_nm)
    : name_(std::move(name)),
      ordinary_(ordinary),
      extraordinary_(extraordinary),
      validity_min_nm_(validity_min_nm),
      validity_max_nm_(validity_max_nm) {
  if (!(validity_min_nm_ > 0.0) || !(validity_max_nm_ > validity_min_nm_))
    throw UsageError("crystal validity range must satisfy 0 < min < max");
  // The whole validity range must stay clear of the Sellmeier pole and keep
  // n^2 > 1; sample both sets across the range.
  const int samples = 64;
  for (int i = 0; i <= samples; ++i) {
    const double lambda_nm =
        validity_min_nm_ + (validity_max_nm_ - validity_min_nm_) * i / samples;
    const double lambda_um = lambda_nm * 1e-3;
    checked_sqrt_index(ordinary_.n_squared(lambda_um), lambda_nm, "ordinary");
    checked_sqrt_index(extraordinary_.n_squared(lambda_um), lambda_nm, "extraordinary");
  }
}

UniaxialCrystal UniaxialCrystal::bbo() {
  // Stock beta barium borate coefficients, lambda in um, valid 205-3500 nm.
  return UniaxialCrystal("BBO",
                         SellmeierSet{2.7359, 0.01878, 0.01822, 0.01354},
                         SellmeierSet{2.3753, 0.01224, 0.01667, 0.01516},
                         205.0, 3500.0);
}

UniaxialCrystal UniaxialCrystal::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open crystal file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("crystal file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    auto read_set = [](const nlohmann::json& node) {
      return SellmeierSet{node.at("A").get<double>(), node.at("B").get<double>(),
                          node.at("C_um2").get<double>(), node.at("D_per_um2").get<double>()};
    };
    const auto& range = j.at("validity_range_nm");
    return UniaxialCrystal(j.at("name").get<std::string>(), read_set(j.at("ordinary")),
                           read_set(j.at("extraordinary")), range.at(0).get<double>(),
                           range.at(1).get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("crystal file " + path.string() + " is missing required fields: " +
                     e.what());
  }
}

void UniaxialCrystal::require_in_range(double lambda_nm) const {
  if (lambda_nm < validity_min_nm_) {
    std::ostringstream oss;
    oss << "wavelength " << lambda_nm << " nm is below the " << name_
        << " validity bound of " << validity_min_nm_ << " nm";
    throw DomainError(oss.str());
  }
  if (lambda_nm > validity_max_nm_) {
    std::ostringstream oss;
    oss << "wavelength " << lambda_nm << " nm is above the " << name_
        << " validity bound of " << validity_max_nm_ << " nm";
    throw DomainError(oss.str());
  }
}

double UniaxialCrystal::ordinary_index(double lambda_nm) const {
  require_in_range(lambda_nm);
  return checked_sqrt_index(ordinary_.n_squared(lambda_nm * 1e-3), lambda_nm, "ordinary");
}

double UniaxialCrystal::principal_extraordinary_index(double lambda_nm) const {
  require_in_range(lambda_nm);
  return checked_sqrt_index(extraordinary_.n_squared(lambda_nm * 1e-3), lambda_nm,
                            "extraordinary");
}

double UniaxialCrystal::extraordinary_index_at_angle(double theta_eff_deg,
                                                     double lambda_nm) const {
  if (!(theta_eff_deg >= 0.0 && theta_eff_deg <= 90.0)) {
    std::ostringstream oss;
    oss << "effective angle " << theta_eff_deg << " deg must lie in [0, 90] deg";
    throw DomainError(oss.str());
  }
  const double no = ordinary_index(lambda_nm);
  const double ne = principal_extraordinary_index(lambda_nm);
  const double t = theta_eff_deg * deg_to_rad;
  const double s2 = std::sin(t) * std::sin(t);
  const double c2 = std::cos(t) * std::cos(t);
  return 1.0 / std::sqrt(s2 / (ne * ne) + c2 / (no * no));
}

bool UniaxialCrystal::is_negative_uniaxial() const {
  const int samples = 128;
  for (int i = 0; i <= samples; ++i) {
    const double lambda_nm =
        validity_min_nm_ + (validity_max_nm_ - validity_min_nm_) * i / samples;
    if (!(principal_extraordinary_index(lambda_nm) < ordinary_index(lambda_nm)))
      return false;
  }
  return true;
}

double effective_angle_deg(const OrientationAngles& orientation) {
  auto check = [](double angle, const char* label) {
    if (!(angle > -90.0 && angle < 90.0)) {
      std::ostringstream oss;
      oss << label << " = " << angle << " deg must lie in (-90, 90) deg";
      throw DomainError(oss.str());
    }
  };
  check(orientation.theta_deg, "theta");
  check(orientation.phi_deg, "phi");
  const double c =
      std::cos(orientation.theta_deg * deg_to_rad) * std::cos(orientation.phi_deg * deg_to_rad);
  return std::acos(c) / deg_to_rad;
}

RotationMatrix3 RotationMatrix3::transposed() const {
  RotationMatrix3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

RotationMatrix3 RotationMatrix3::operator*(const RotationMatrix3& rhs) const {
  RotationMatrix3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += (*this)(i, k) * rhs(k, j);
      r(i, j) = acc;
    }
  return r;
}

std::array<double, 3> RotationMatrix3::operator*(const std::array<double, 3>& v) const {
  std::array<double, 3> r{};
  for (int i = 0; i < 3; ++i)
    r[static_cast<std::size_t>(i)] =
        (*this)(i, 0) * v[0] + (*this)(i, 1) * v[1] + (*this)(i, 2) * v[2];
  return r;
}

double RotationMatrix3::determinant() const {
  const auto& a = *this;
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

RotationMatrix3 rotation_matrix(const OrientationAngles& orientation) {
  const double ct = std::cos(orientation.theta_deg * deg_to_rad);
  const double st = std::sin(orientation.theta_deg * deg_to_rad);
  const double cp = std::cos(orientation.phi_deg * deg_to_rad);
  const double sp = std::sin(orientation.phi_deg * deg_to_rad);
  const double cg = std::cos(orientation.gamma_deg * deg_to_rad);
  const double sg = std::sin(orientation.gamma_deg * deg_to_rad);

  RotationMatrix3 r;
  if (orientation.order == RotationOrder::XYZ) {
    // Rz(gamma) * Ry(phi) * Rx(theta)
    r.m = {cg * cp, -sg * ct + cg * sp * st, sg * st + cg * sp * ct,
           sg * cp, cg * ct + sg * sp * st,  -cg * st + sg * sp * ct,
           -sp,     cp * st,                 cp * ct};
  } else {
    // Rz(gamma) * Rx(theta) * Ry(phi)
    r.m = {cg * cp - sg * st * sp, -sg * ct, cg * sp + sg * st * cp,
           sg * cp + cg * st * sp, cg * ct,  sg * sp - cg * st * cp,
           -ct * sp,               st,       ct * cp};
  }
  return r;
}

std::array<double, 3> optic_axis_direction(const OrientationAngles& orientation) {
  return rotation_matrix(orientation) * std::array<double, 3>{0.0, 0.0, 1.0};
}

} // namespace spdc
