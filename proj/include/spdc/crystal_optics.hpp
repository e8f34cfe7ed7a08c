#pragma once

#include <array>
#include <filesystem>
#include <string>

namespace spdc {

/// Dispersion model n^2(lambda) = A + B/(lambda^2 - C) - D*lambda^2,
/// lambda in micrometres. Defined only for lambda^2 > C.
struct SellmeierSet {
  double A = 0.0;         // dimensionless
  double B_um2 = 0.0;     // um^2
  double C_um2 = 0.0;     // um^2
  double D_per_um2 = 0.0; // um^-2

  double n_squared(double lambda_um) const;
};

/// Uniaxial birefringent crystal: ordinary and principal extraordinary
/// dispersion plus the wavelength range over which the coefficients are valid.
class UniaxialCrystal {
public:
  UniaxialCrystal(std::string name, SellmeierSet ordinary, SellmeierSet extraordinary,
                  double validity_min_nm, double validity_max_nm);

  /// The stock BBO data set shipped with the toolkit.
  static UniaxialCrystal bbo();

  /// Load a crystal definition from a JSON file (see crystals/bbo.json for
  /// the schema). Throws UsageError on malformed input, DomainError if the
  /// loaded model violates its own validity range.
  static UniaxialCrystal from_json_file(const std::filesystem::path& path);

  const std::string& name() const { return name_; }
  const SellmeierSet& ordinary() const { return ordinary_; }
  const SellmeierSet& extraordinary() const { return extraordinary_; }
  double validity_min_nm() const { return validity_min_nm_; }
  double validity_max_nm() const { return validity_max_nm_; }

  /// n_o at a vacuum wavelength in nm.
  double ordinary_index(double lambda_nm) const;

  /// Principal extraordinary index at a vacuum wavelength in nm.
  double principal_extraordinary_index(double lambda_nm) const;

  /// Index of the extraordinary wave propagating at theta_eff degrees from
  /// the optic axis: 1/n^2 = sin^2/n_e^2 + cos^2/n_o^2.
  double extraordinary_index_at_angle(double theta_eff_deg, double lambda_nm) const;

  /// True when the principal extraordinary index stays below the ordinary
  /// index across the validity range (sampled).
  bool is_negative_uniaxial() const;

  /// Throws DomainError naming the violated bound if lambda_nm falls outside
  /// the validity range.
  void require_in_range(double lambda_nm) const;

private:
  std::string name_;
  SellmeierSet ordinary_;
  SellmeierSet extraordinary_;
  double validity_min_nm_;
  double validity_max_nm_;
};

enum class RotationOrder { XYZ, YXZ };

/// Crystal-stage rotation state. theta and phi are total tilts (reference
/// offset included); gamma is the rotation about the pump axis and does not
/// move the optic axis away from the pump.
struct OrientationAngles {
  double theta_deg = 42.7;
  double phi_deg = 0.0;
  double gamma_deg = 0.0;
  RotationOrder order = RotationOrder::XYZ;
  double theta0_deg = 42.7;
  double phi0_deg = 0.0;
};

/// 3x3 rotation matrix, row-major.
struct RotationMatrix3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double operator()(int row, int col) const { return m[static_cast<std::size_t>(row * 3 + col)]; }
  double& operator()(int row, int col) { return m[static_cast<std::size_t>(row * 3 + col)]; }

  static RotationMatrix3 identity() { return RotationMatrix3{}; }
  RotationMatrix3 transposed() const;
  RotationMatrix3 operator*(const RotationMatrix3& rhs) const;
  std::array<double, 3> operator*(const std::array<double, 3>& v) const;
  double determinant() const;
};

/// Angle between the pump propagation direction and the optic axis:
/// theta' = arccos(cos theta * cos phi). Independent of gamma and of the
/// rotation order. Requires theta, phi in (-90, 90) degrees.
double effective_angle_deg(const OrientationAngles& orientation);

/// Composed stage rotation for the configured order:
///   XYZ: Rz(gamma) * Ry(phi) * Rx(theta)
///   YXZ: Rz(gamma) * Rx(theta) * Ry(phi)
/// Entry (3,3) equals cos theta * cos phi for both orders.
RotationMatrix3 rotation_matrix(const OrientationAngles& orientation);

/// Unit direction of the optic axis after the stage rotation, i.e. the
/// rotation matrix applied to the z axis. Its z component is cos theta'.
std::array<double, 3> optic_axis_direction(const OrientationAngles& orientation);

} // namespace spdc
