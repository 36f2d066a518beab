#pragma once

#include "cislunar/ephemeris.hpp"
#include "cislunar/units_frames.hpp"

#include <array>
#include <memory>
#include <vector>

namespace cislunar {

enum class Direction { FORWARD, BACKWARD };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

// Modified equinoctial elements. p is in whatever length unit the caller
// works in (km at I/O boundaries, DU inside propagation).
struct OrbitStateMee {
  double p = 1.0;
  double l = 0.0;
  double m = 0.0;
  double n = 0.0;
  double s = 0.0;
  double q = 0.0;  // true longitude, unwrapped while propagating
  double mass_ratio = 1.0;
  BodyId center = BodyId::MOON;

  Vec6 vec() const;
  static OrbitStateMee from_vec(const Vec6& x, BodyId center, double mass_ratio = 1.0);
  double eta() const;  // 1 + l cos q + m sin q
};

struct ClassicalElements {
  double a = 1.0;
  double e = 0.0;
  double i = 0.0;
  double raan = 0.0;
  double argp = 0.0;
  double true_anomaly = 0.0;
};

struct ControlVector {
  double thrust_accel = 0.0;  // at initial mass
  double alpha = 0.0;         // in-plane angle
  double beta = 0.0;          // out-of-plane angle
};

OrbitStateMee coe_to_mee(const ClassicalElements& coe, BodyId center = BodyId::MOON);
ClassicalElements mee_to_coe(const OrbitStateMee& x);

CartesianState mee_to_cartesian(const OrbitStateMee& x, double mu);
OrbitStateMee cartesian_to_mee(const CartesianState& y, double mu);

// The 6x3 input matrix (rows p, l, m, n, s, q) and the drift vector (only
// the true-longitude row is nonzero) of the Gauss equations.
struct GaussSystem {
  Eigen::Matrix<double, 6, 3> input;
  Vec6 drift;
};
GaussSystem gauss_system(const OrbitStateMee& x, double mu);

// d/dt (p, l, m, n, s, q) for an LVLH perturbing acceleration.
Vec6 gauss_rates(const OrbitStateMee& x, const Vec3& a_lvlh, double mu);

// Perturbation on a body at r12 (relative to the primary) from a third body
// at r13: mu3 * [(r13 - r12)/|r13 - r12|^3 - r13/|r13|^3], evaluated in a
// cancellation-free form.
Vec3 third_body_accel(const Vec3& r12, const Vec3& r13, double mu3);

Vec3 thrust_accel_lvlh(const ControlVector& u, double mass_ratio);

// Closed-form mass ratio under full thrust, tau and tau_fin in seconds.
double mass_ratio_at(double tau, double tau_fin, Direction direction, double u_max_kms2,
                     double c_kms);

// Third body as seen from the central body, in canonical units of the arc.
struct ThirdBodySample {
  double mu = 0.0;
  Vec3 position = Vec3::Zero();
};

struct ThirdBodySamples {
  std::array<ThirdBodySample, 2> items{};
  int count = 0;
};

// Third bodies acting on an arc around `central`, with the ephemeris that
// places them.
class PerturbationSet {
 public:
  PerturbationSet() = default;
  PerturbationSet(BodyId central, std::vector<BodyId> bodies,
                  std::shared_ptr<const EphemerisProvider> ephemeris);

  // Sun + Moon around the Earth, Sun + Earth around the Moon.
  static PerturbationSet standard(BodyId central, std::shared_ptr<const EphemerisProvider> ephemeris);
  static PerturbationSet none(BodyId central);

  BodyId central() const { return central_; }
  const std::vector<BodyId>& bodies() const { return bodies_; }
  bool empty() const { return bodies_.empty(); }
  const EphemerisProvider* ephemeris() const { return ephemeris_.get(); }

  ThirdBodySamples sample(double epoch, const CanonicalScale& scale) const;

  // Total third-body acceleration (km/s^2) at a physical position (km).
  Vec3 accel_physical(const Vec3& r_km, double epoch) const;

 private:
  BodyId central_ = BodyId::MOON;
  std::vector<BodyId> bodies_;
  std::shared_ptr<const EphemerisProvider> ephemeris_;
};

}  // namespace cislunar
