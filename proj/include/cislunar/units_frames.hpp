#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace cislunar {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

enum class FrameTag { ECI, MCI, SYNODIC, LVLH_E, LVLH_M };
enum class BodyId { SUN, EARTH, MOON, GATEWAY };

std::string_view to_string(FrameTag f);
std::string_view to_string(BodyId b);
FrameTag frame_from_string(std::string_view s);
BodyId body_from_string(std::string_view s);

// Position (km) and velocity (km/s), unless the state has been scaled to
// canonical units by a CanonicalScale.
struct CartesianState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  FrameTag frame = FrameTag::ECI;
  BodyId center = BodyId::EARTH;

  Vec6 stacked() const;
  static CartesianState from_stacked(const Vec6& y, FrameTag frame, BodyId center);
};

struct BodyConstants {
  double mu_km3s2;
  double radius_km;
};

namespace bodies {
inline constexpr BodyConstants sun{132712440041.279, 0.0};
inline constexpr BodyConstants earth{398600.436, 6378.136};
inline constexpr BodyConstants moon{4902.800, 1737.400};
}  // namespace bodies

const BodyConstants& constants_of(BodyId body);

// Lunar equator taken coincident with the ecliptic.
inline constexpr double kObliquityDeg = 23.4;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDeg = kPi / 180.0;
inline constexpr double kSecondsPerDay = 86400.0;

// Direction-cosine matrix: maps components in the parent frame to components
// in the rotated frame, v_child = R * v_parent.
class RotationMatrix3 {
 public:
  RotationMatrix3() : m_(Mat3::Identity()) {}
  explicit RotationMatrix3(const Mat3& m) : m_(m) {}

  const Mat3& matrix() const { return m_; }
  Vec3 apply(const Vec3& v) const { return m_ * v; }
  RotationMatrix3 transpose() const { return RotationMatrix3(m_.transpose()); }
  RotationMatrix3 operator*(const RotationMatrix3& rhs) const {
    return RotationMatrix3(m_ * rhs.m_);
  }
  double operator()(int r, int c) const { return m_(r, c); }

  // Largest deviation of R^T R from identity, and det(R).
  double orthonormality_error() const;
  double determinant() const { return m_.determinant(); }

 private:
  Mat3 m_;
};

// R_axis(angle) for axis in {1,2,3}; counterclockwise frame rotation.
RotationMatrix3 elementary_rotation(int axis, double angle);

// ECI -> MCI components: R1(epsilon).
RotationMatrix3 eci_to_mci();
Vec3 eci_to_mci(const Vec3& v);
Vec3 mci_to_eci(const Vec3& v);

// Rows r_hat, theta_hat, h_hat of the local vertical local horizontal frame.
RotationMatrix3 lvlh_basis(const CartesianState& state);

// Rows i_hat (Earth->Moon), j_hat, k_hat (lunar orbit normal), from the
// Moon's geocentric ECI state.
RotationMatrix3 synodic_basis(const CartesianState& moon_rel_earth_eci);

struct CanonicalScale {
  double du_km = 1.0;
  double tu_s = 1.0;
  double mu_canonical = 1.0;
  double mu_km3s2 = 1.0;

  double vu_kms() const { return du_km / tu_s; }
  double au_kms2() const { return du_km / (tu_s * tu_s); }

  CartesianState to_canonical(const CartesianState& s) const;
  CartesianState to_physical(const CartesianState& s) const;
};

CanonicalScale canonical_scale(double mu_body_km3s2, double radius_km);
CanonicalScale canonical_scale(BodyId body);

// Wrap an angle to (-pi, pi].
double wrap_pi(double angle);

}  // namespace cislunar
