#include "cislunar/units_frames.hpp"

#include "cislunar/error.hpp"

#include <cmath>
#include <string>

namespace cislunar {

std::string_view to_string(FrameTag f) {
  switch (f) {
    case FrameTag::ECI: return "ECI";
    case FrameTag::MCI: return "MCI";
    case FrameTag::SYNODIC: return "SYNODIC";
    case FrameTag::LVLH_E: return "LVLH_E";
    case FrameTag::LVLH_M: return "LVLH_M";
  }
  return "?";
}

std::string_view to_string(BodyId b) {
  switch (b) {
    case BodyId::SUN: return "SUN";
    case BodyId::EARTH: return "EARTH";
    case BodyId::MOON: return "MOON";
    case BodyId::GATEWAY: return "GATEWAY";
  }
  return "?";
}

FrameTag frame_from_string(std::string_view s) {
  if (s == "ECI") return FrameTag::ECI;
  if (s == "MCI") return FrameTag::MCI;
  if (s == "SYNODIC") return FrameTag::SYNODIC;
  if (s == "LVLH_E") return FrameTag::LVLH_E;
  if (s == "LVLH_M") return FrameTag::LVLH_M;
  throw InvalidInput("unknown frame tag '" + std::string(s) + "'");
}

BodyId body_from_string(std::string_view s) {
  if (s == "SUN") return BodyId::SUN;
  if (s == "EARTH") return BodyId::EARTH;
  if (s == "MOON") return BodyId::MOON;
  if (s == "GATEWAY") return BodyId::GATEWAY;
  throw InvalidInput("unknown body '" + std::string(s) + "'");
}

Vec6 CartesianState::stacked() const {
  Vec6 y;
  y << position, velocity;
  return y;
}

CartesianState CartesianState::from_stacked(const Vec6& y, FrameTag frame, BodyId center) {
  return CartesianState{y.head<3>(), y.tail<3>(), frame, center};
}

const BodyConstants& constants_of(BodyId body) {
  switch (body) {
    case BodyId::SUN: return bodies::sun;
    case BodyId::EARTH: return bodies::earth;
    case BodyId::MOON: return bodies::moon;
    case BodyId::GATEWAY: break;
  }
  throw InvalidInput("no physical constants for GATEWAY");
}

double RotationMatrix3::orthonormality_error() const {
  return (m_.transpose() * m_ - Mat3::Identity()).cwiseAbs().maxCoeff();
}

RotationMatrix3 elementary_rotation(int axis, double angle) {
  if (!std::isfinite(angle)) throw InvalidInput("elementary_rotation: non-finite angle");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 m;
  switch (axis) {
    case 1: m << 1, 0, 0, 0, c, s, 0, -s, c; break;
    case 2: m << c, 0, -s, 0, 1, 0, s, 0, c; break;
    case 3: m << c, s, 0, -s, c, 0, 0, 0, 1; break;
    default: throw InvalidInput("elementary_rotation: axis must be 1, 2 or 3");
  }
  return RotationMatrix3(m);
}

RotationMatrix3 eci_to_mci() {
  static const RotationMatrix3 r = elementary_rotation(1, kObliquityDeg * kDeg);
  return r;
}

Vec3 eci_to_mci(const Vec3& v) { return eci_to_mci().apply(v); }
Vec3 mci_to_eci(const Vec3& v) { return eci_to_mci().matrix().transpose() * v; }

RotationMatrix3 lvlh_basis(const CartesianState& state) {
  const double r = state.position.norm();
  if (!(r > 0.0)) throw DegenerateGeometry("lvlh_basis: zero position vector");
  const Vec3 h = state.position.cross(state.velocity);
  const double hn = h.norm();
  if (hn <= 1e-14 * r * state.velocity.norm())
    throw DegenerateGeometry("lvlh_basis: zero angular momentum (rectilinear state)");
  const Vec3 r_hat = state.position / r;
  const Vec3 h_hat = h / hn;
  const Vec3 t_hat = h_hat.cross(r_hat);
  Mat3 m;
  m.row(0) = r_hat.transpose();
  m.row(1) = t_hat.transpose();
  m.row(2) = h_hat.transpose();
  return RotationMatrix3(m);
}

RotationMatrix3 synodic_basis(const CartesianState& moon_rel_earth_eci) {
  // Same row construction as LVLH: i along Earth->Moon, k along orbit normal.
  return lvlh_basis(moon_rel_earth_eci);
}

CartesianState CanonicalScale::to_canonical(const CartesianState& s) const {
  return CartesianState{s.position / du_km, s.velocity / vu_kms(), s.frame, s.center};
}

CartesianState CanonicalScale::to_physical(const CartesianState& s) const {
  return CartesianState{s.position * du_km, s.velocity * vu_kms(), s.frame, s.center};
}

CanonicalScale canonical_scale(double mu_body_km3s2, double radius_km) {
  if (!(mu_body_km3s2 > 0.0) || !(radius_km > 0.0))
    throw InvalidInput("canonical_scale: mu and radius must be positive");
  CanonicalScale sc;
  sc.du_km = radius_km;
  sc.tu_s = std::sqrt(radius_km * radius_km * radius_km / mu_body_km3s2);
  sc.mu_canonical = 1.0;
  sc.mu_km3s2 = mu_body_km3s2;
  return sc;
}

CanonicalScale canonical_scale(BodyId body) {
  const auto& c = constants_of(body);
  return canonical_scale(c.mu_km3s2, c.radius_km);
}

double wrap_pi(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace cislunar
