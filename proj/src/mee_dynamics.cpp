#include "cislunar/mee_dynamics.hpp"

#include "cislunar/error.hpp"
#include "cislunar/mee_kernel.hpp"

#include <cmath>
#include <string>

namespace cislunar {

std::string_view to_string(Direction d) {
  return d == Direction::FORWARD ? "forward" : "backward";
}

Direction direction_from_string(std::string_view s) {
  if (s == "forward") return Direction::FORWARD;
  if (s == "backward") return Direction::BACKWARD;
  throw InvalidInput("unknown direction '" + std::string(s) + "'");
}

Vec6 OrbitStateMee::vec() const {
  Vec6 x;
  x << p, l, m, n, s, q;
  return x;
}

OrbitStateMee OrbitStateMee::from_vec(const Vec6& x, BodyId center, double mass_ratio) {
  return OrbitStateMee{x[0], x[1], x[2], x[3], x[4], x[5], mass_ratio, center};
}

double OrbitStateMee::eta() const { return 1.0 + l * std::cos(q) + m * std::sin(q); }

OrbitStateMee coe_to_mee(const ClassicalElements& c, BodyId center) {
  if (!(c.e >= 0.0) || !(c.e < 1.0))
    throw SingularityError("coe_to_mee: only elliptic orbits (0 <= e < 1) are supported");
  if (!(c.a > 0.0)) throw InvalidInput("coe_to_mee: semimajor axis must be positive");
  if (!(c.i >= 0.0) || c.i >= kPi)
    throw SingularityError("coe_to_mee: inclination must lie in [0, pi)");
  const double t = std::tan(0.5 * c.i);
  const double lp = c.raan + c.argp;
  OrbitStateMee x;
  x.p = c.a * (1.0 - c.e * c.e);
  x.l = c.e * std::cos(lp);
  x.m = c.e * std::sin(lp);
  x.n = t * std::cos(c.raan);
  x.s = t * std::sin(c.raan);
  x.q = lp + c.true_anomaly;
  x.center = center;
  return x;
}

ClassicalElements mee_to_coe(const OrbitStateMee& x) {
  const double e = std::hypot(x.l, x.m);
  if (!(e < 1.0)) throw SingularityError("mee_to_coe: non-elliptic state");
  if (!(x.p > 0.0)) throw InvalidInput("mee_to_coe: p must be positive");
  ClassicalElements c;
  c.e = e;
  c.a = x.p / (1.0 - e * e);
  c.i = 2.0 * std::atan(std::hypot(x.n, x.s));
  c.raan = std::atan2(x.s, x.n);
  const double lp = std::atan2(x.m, x.l);
  c.argp = wrap_pi(lp - c.raan);
  c.true_anomaly = wrap_pi(x.q - lp);
  c.raan = wrap_pi(c.raan);
  return c;
}

CartesianState mee_to_cartesian(const OrbitStateMee& x, double mu) {
  if (!(x.p > 0.0)) throw InvalidInput("mee_to_cartesian: p must be positive");
  const double eta = x.eta();
  if (!(eta > 0.0)) throw SingularityError("mee_to_cartesian: hyperbolic branch (eta <= 0)");
  const double s2 = 1.0 + x.n * x.n + x.s * x.s;
  const Vec3 f((1.0 + x.n * x.n - x.s * x.s) / s2, 2.0 * x.n * x.s / s2, -2.0 * x.s / s2);
  const Vec3 gg(2.0 * x.n * x.s / s2, (1.0 - x.n * x.n + x.s * x.s) / s2, 2.0 * x.n / s2);
  const double cq = std::cos(x.q), sq = std::sin(x.q);
  const double r = x.p / eta;
  const double k = std::sqrt(mu / x.p);
  CartesianState y;
  y.position = r * (cq * f + sq * gg);
  y.velocity = k * (-(x.m + sq) * f + (x.l + cq) * gg);
  y.frame = x.center == BodyId::EARTH ? FrameTag::ECI : FrameTag::MCI;
  y.center = x.center;
  return y;
}

OrbitStateMee cartesian_to_mee(const CartesianState& y, double mu) {
  const Vec3& r = y.position;
  const Vec3& v = y.velocity;
  const double rn = r.norm();
  if (!(rn > 0.0)) throw SingularityError("cartesian_to_mee: zero position");
  const Vec3 h = r.cross(v);
  const double hn = h.norm();
  if (hn <= 1e-14 * rn * v.norm() || !(hn > 0.0))
    throw SingularityError("cartesian_to_mee: rectilinear state");
  const Vec3 hh = h / hn;
  if (1.0 + hh.z() <= 1e-14) throw SingularityError("cartesian_to_mee: retrograde equatorial orbit");
  OrbitStateMee x;
  x.center = y.center;
  x.p = hn * hn / mu;
  x.n = -hh.y() / (1.0 + hh.z());
  x.s = hh.x() / (1.0 + hh.z());
  const double s2 = 1.0 + x.n * x.n + x.s * x.s;
  const Vec3 f((1.0 + x.n * x.n - x.s * x.s) / s2, 2.0 * x.n * x.s / s2, -2.0 * x.s / s2);
  const Vec3 g(2.0 * x.n * x.s / s2, (1.0 - x.n * x.n + x.s * x.s) / s2, 2.0 * x.n / s2);
  const Vec3 ecc = v.cross(h) / mu - r / rn;
  x.l = ecc.dot(f);
  x.m = ecc.dot(g);
  x.q = std::atan2(r.dot(g), r.dot(f));
  return x;
}

GaussSystem gauss_system(const OrbitStateMee& x, double mu) {
  if (!(x.eta() > 0.0)) throw SingularityError("gauss_system: hyperbolic branch (eta <= 0)");
  const kernel::A6<double> a{x.p, x.l, x.m, x.n, x.s, x.q};
  const auto g = kernel::geometry(a, mu);
  const auto c = kernel::gauss_columns(a, g, mu);
  GaussSystem out;
  for (int k = 0; k < 6; ++k) {
    out.input(k, 0) = c.col_r[k];
    out.input(k, 1) = c.col_t[k];
    out.input(k, 2) = c.col_h[k];
  }
  out.drift.setZero();
  out.drift[5] = c.q_drift;
  return out;
}

Vec6 gauss_rates(const OrbitStateMee& x, const Vec3& a_lvlh, double mu) {
  const GaussSystem g = gauss_system(x, mu);
  return g.drift + g.input * a_lvlh;
}

Vec3 third_body_accel(const Vec3& r12, const Vec3& r13, double mu3) {
  if (!(r13.norm() > 0.0)) throw SingularityError("third_body_accel: third body at the primary");
  if (!((r13 - r12).norm() > 0.0))
    throw SingularityError("third_body_accel: spacecraft coincides with the third body");
  const kernel::A3<double> a = kernel::third_body<double>({r12.x(), r12.y(), r12.z()}, r13, mu3);
  return {a[0], a[1], a[2]};
}

Vec3 thrust_accel_lvlh(const ControlVector& u, double mass_ratio) {
  if (!(mass_ratio > 0.0) || mass_ratio > 1.0)
    throw InvalidInput("thrust_accel_lvlh: mass ratio must lie in (0, 1]");
  const double k = u.thrust_accel / mass_ratio;
  const double cb = std::cos(u.beta);
  return {k * std::sin(u.alpha) * cb, k * std::cos(u.alpha) * cb, k * std::sin(u.beta)};
}

double mass_ratio_at(double tau, double tau_fin, Direction direction, double u_max_kms2,
                     double c_kms) {
  if (!(c_kms > 0.0)) throw InvalidInput("mass_ratio_at: exhaust speed must be positive");
  const double burned = direction == Direction::FORWARD ? tau : tau_fin - tau;
  const double mr = 1.0 - (u_max_kms2 / c_kms) * burned;
  if (!(mr > 0.0)) throw PropellantExhausted("mass ratio reached " + std::to_string(mr));
  return mr;
}

// ---------------------------------------------------------------------------

PerturbationSet::PerturbationSet(BodyId central, std::vector<BodyId> bodies,
                                 std::shared_ptr<const EphemerisProvider> ephemeris)
    : central_(central), bodies_(std::move(bodies)), ephemeris_(std::move(ephemeris)) {
  if (bodies_.size() > 2) throw InvalidInput("PerturbationSet: at most two third bodies");
  for (BodyId b : bodies_) {
    if (b == central_) throw InvalidInput("PerturbationSet: central body listed as third body");
    if (b == BodyId::GATEWAY) throw InvalidInput("PerturbationSet: GATEWAY cannot perturb");
  }
  if (!bodies_.empty() && !ephemeris_)
    throw InvalidInput("PerturbationSet: third bodies need an ephemeris");
}

PerturbationSet PerturbationSet::standard(BodyId central,
                                          std::shared_ptr<const EphemerisProvider> ephemeris) {
  if (central == BodyId::EARTH) return {central, {BodyId::SUN, BodyId::MOON}, std::move(ephemeris)};
  if (central == BodyId::MOON) return {central, {BodyId::SUN, BodyId::EARTH}, std::move(ephemeris)};
  throw InvalidInput("PerturbationSet: central body must be EARTH or MOON");
}

PerturbationSet PerturbationSet::none(BodyId central) { return {central, {}, nullptr}; }

ThirdBodySamples PerturbationSet::sample(double epoch, const CanonicalScale& scale) const {
  ThirdBodySamples out;
  for (BodyId b : bodies_) {
    const CartesianState st = ephemeris_->body_state(b, epoch, central_);
    auto& item = out.items[static_cast<std::size_t>(out.count++)];
    item.mu = constants_of(b).mu_km3s2 / scale.mu_km3s2;
    item.position = st.position / scale.du_km;
  }
  return out;
}

Vec3 PerturbationSet::accel_physical(const Vec3& r_km, double epoch) const {
  Vec3 total = Vec3::Zero();
  for (BodyId b : bodies_) {
    const CartesianState st = ephemeris_->body_state(b, epoch, central_);
    total += third_body_accel(r_km, st.position, constants_of(b).mu_km3s2);
  }
  return total;
}

}  // namespace cislunar
