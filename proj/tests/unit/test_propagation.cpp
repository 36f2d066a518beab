#include "cislunar/epoch.hpp"
#include "cislunar/error.hpp"
#include "cislunar/propagation.hpp"
#include "cislunar/surrogate.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace cislunar;

namespace {

ArcModel coast_model(BodyId central, Direction d, double epoch, double tau_fin,
                     PerturbationSet p = {}) {
  if (p.bodies().empty()) p = PerturbationSet::none(central);
  return make_arc_model(central, d, epoch, tau_fin, 0.0, 30.0, std::move(p));
}

Vec6 gateway_du() {
  Vec6 x = coe_to_mee(default_gateway_anchor().elements).vec();
  x[0] /= bodies::moon.radius_km;
  return x;
}

// Moon-centered Cartesian coast with Earth and Sun, classical RK4.
struct CartesianCoast {
  const EphemerisProvider& eph;
  double t0;

  Vec6 rate(double t, const Vec6& y) const {
    const Vec3 r = y.head<3>();
    Vec3 a = -bodies::moon.mu_km3s2 * r / std::pow(r.norm(), 3);
    for (BodyId b : {BodyId::EARTH, BodyId::SUN})
      a += oracle::third_body_long_double(r, eph.body_state(b, t, BodyId::MOON).position,
                                          constants_of(b).mu_km3s2);
    Vec6 d;
    d << y.tail<3>(), a;
    return d;
  }
  Vec6 step(double t, const Vec6& y, double h) const {
    const Vec6 k1 = rate(t, y);
    const Vec6 k2 = rate(t + h / 2, y + h / 2 * k1);
    const Vec6 k3 = rate(t + h / 2, y + h / 2 * k2);
    const Vec6 k4 = rate(t + h, y + h * k3);
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  double earth_distance(double t, const Vec6& y) const {
    return (mci_to_eci(y.head<3>()) + eph.body_state(BodyId::MOON, t, BodyId::EARTH).position).norm();
  }
  // Epoch at which the distance from the Earth falls to rho.
  double crossing(const Vec6& y0, double rho, double h = 60.0) const {
    double t = t0;
    Vec6 y = y0;
    for (int k = 0; k < 1'000'000; ++k) {
      const Vec6 next = step(t, y, h);
      if (earth_distance(t + h, next) <= rho) {
        double lo = 0.0, hi = h;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (earth_distance(t + mid, step(t, y, mid)) <= rho ? hi : lo) = mid;
        }
        return t + 0.5 * (lo + hi);
      }
      t += h;
      y = next;
    }
    return NAN;
  }
};

}  // namespace

TEST_CASE("Dormand-Prince on a linear system") {
  PropagationConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  auto rhs = [](double, const ExtendedState& y) { return ExtendedState(-y); };
  ExtendedState y0 = ExtendedState::Ones();
  DormandPrince45 dp(rhs, 0.0, y0, cfg);
  double worst_dense = 0.0;
  while (dp.step(3.0)) {
    const double mid = 0.5 * (dp.t_prev() + dp.t());
    worst_dense = std::max(worst_dense, std::abs(dp.dense(mid)[0] - std::exp(-mid)));
  }
  CHECK(dp.t() == 3.0);
  CHECK(std::abs(dp.y()[0] - std::exp(-3.0)) < 1e-9);
  CHECK(worst_dense < 1e-8);
  CHECK(dp.accepted() > 5);
}

TEST_CASE("coasting conserves the Keplerian elements") {
  const Vec6 x0 = gateway_du();
  const double tu = canonical_scale(BodyId::MOON).tu_s;
  const double a = x0[0] / (1.0 - x0[1] * x0[1] - x0[2] * x0[2]);
  const double period_s = 2.0 * kPi * std::pow(a, 1.5) * tu;
  const ArcModel m = coast_model(BodyId::MOON, Direction::FORWARD, 0.0, 3.0 * period_s);
  PropagationConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-14;
  const ArcResult r = propagate_arc(x0, Costate::Zero(), 0.0, 3.0 * period_s, m, cfg);
  CHECK((r.x_final.head<5>() - x0.head<5>()).norm() < 1e-9 * x0.head<5>().norm());
  CHECK(r.x_final[5] - x0[5] == doctest::Approx(6.0 * kPi).epsilon(1e-9));

  auto energy = [](const Vec6& x) {
    const CartesianState y = mee_to_cartesian(OrbitStateMee::from_vec(x, BodyId::MOON), 1.0);
    return 0.5 * y.velocity.squaredNorm() - 1.0 / y.position.norm();
  };
  double worst = 0.0;
  for (const auto& s : r.trajectory.samples)
    worst = std::max(worst, std::abs(energy(s.x) / energy(x0) - 1.0));
  CHECK(worst < 1e-9);
}

TEST_CASE("coast phase follows Kepler's equation") {
  // Independent of the element integrator: mean anomaly advances linearly.
  Vec6 x0;
  x0 << 3.0, 0.3, 0.1, 0.2, 0.05, 0.4;
  const double tu = canonical_scale(BodyId::MOON).tu_s;
  const double tau = 5.3 * tu;
  const ArcModel m = coast_model(BodyId::MOON, Direction::FORWARD, 0.0, tau);
  PropagationConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-14;
  const ArcResult r = propagate_arc(x0, Costate::Zero(), 0.0, tau, m, cfg);

  const ClassicalElements c0 = mee_to_coe(OrbitStateMee::from_vec(x0, BodyId::MOON));
  auto mean_anom = [&](double nu) {
    const double E = 2.0 * std::atan(std::sqrt((1 - c0.e) / (1 + c0.e)) * std::tan(nu / 2));
    return E - c0.e * std::sin(E);
  };
  const ClassicalElements c1 = mee_to_coe(OrbitStateMee::from_vec(r.x_final, BodyId::MOON));
  const double dm = wrap_pi(mean_anom(c1.true_anomaly) - mean_anom(c0.true_anomaly) -
                            std::pow(c0.a, -1.5) * 5.3);
  CHECK(std::abs(dm) < 1e-9);
}

TEST_CASE("tighter tolerances converge") {
  const Vec6 x0 = gateway_du();
  const auto eph = make_default_ephemeris();
  const double t0 = utc_to_tdb("2025-05-26T00:00:00Z");
  const ArcModel m = make_arc_model(BodyId::MOON, Direction::FORWARD, t0, 10 * 86400.0, 4.903e-7,
                                    30.0, PerturbationSet::standard(BodyId::MOON, eph));
  Costate lam;
  lam << 0.2, -0.4, 0.3, 0.1, -0.5, 0.6;
  auto final_at = [&](double rtol) {
    PropagationConfig cfg;
    cfg.rtol = rtol;
    cfg.atol = rtol * 1e-2;
    cfg.record = false;
    return propagate_arc(x0, lam, 0.0, 10 * 86400.0, m, cfg).x_final;
  };
  const Vec6 ref = final_at(1e-13);
  const double e7 = (final_at(1e-7) - ref).norm();
  const double e10 = (final_at(1e-10) - ref).norm();
  const double e12 = (final_at(1e-12) - ref).norm();
  CHECK(e10 < e7);
  CHECK(e12 < e10);
  CHECK(e12 < 1e-7 * ref.norm());
}

TEST_CASE("backward arc re-propagated forward recovers its start") {
  const auto eph = make_default_ephemeris();
  const double tf = utc_to_tdb("2025-06-30T00:00:00Z");
  const double tau_fin = 8 * 86400.0;
  PerturbationSet p = PerturbationSet::standard(BodyId::MOON, eph);
  const ArcModel back = make_arc_model(BodyId::MOON, Direction::BACKWARD, tf, tau_fin, 4.903e-7,
                                       30.0, p);
  const ArcModel fwd = make_arc_model(BodyId::MOON, Direction::FORWARD, tf - tau_fin, tau_fin,
                                      4.903e-7, 30.0, p);
  Vec6 x0;
  x0 << 1.1, 0.01, 0.0, 1.0, 0.0, 0.0;
  Costate lam;
  lam << 0.5, 0.1, -0.2, 0.05, 0.3, -0.1;
  PropagationConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-14;
  const ArcResult b = propagate_arc(x0, lam, 0.0, tau_fin, back, cfg);
  // The tau-domain costate of the reversed arc is the negated one, so the
  // same thrust direction is chosen.
  const ArcResult f = propagate_arc(b.x_final, -b.lambda_final, 0.0, tau_fin, fwd, cfg);
  CHECK((f.x_final - x0).norm() < 1e-7 * x0.norm());
  CHECK((f.lambda_final + lam).norm() < 1e-7 * lam.norm());
}

TEST_CASE("crossing epoch agrees with an independent Cartesian propagator") {
  const auto eph = make_default_ephemeris();
  const double t0 = utc_to_tdb("2025-05-26T00:00:00Z");
  const Vec3 to_earth =
      eci_to_mci(-eph->body_state(BodyId::MOON, t0, BodyId::EARTH).position).normalized();
  // Prograde, bound to the Moon and heading out towards the Earth.
  const Vec3 side = Vec3::UnitZ().cross(to_earth).normalized();
  CartesianState y0{1e4 * to_earth, 0.8 * to_earth + 0.5 * side, FrameTag::MCI, BodyId::MOON};

  const CartesianCoast oracle{*eph, t0};
  const double t_cross = oracle.crossing(y0.stacked(), kDefaultTransitionRadiusKm);
  REQUIRE(std::isfinite(t_cross));

  OrbitStateMee x = cartesian_to_mee(y0, bodies::moon.mu_km3s2);
  x.p /= bodies::moon.radius_km;
  const double tau_fin = (t_cross - t0) + 5 * 86400.0;
  const ArcModel lunar = coast_model(BodyId::MOON, Direction::FORWARD, t0, tau_fin,
                                     PerturbationSet::standard(BodyId::MOON, eph));
  const ArcModel terr = coast_model(BodyId::EARTH, Direction::FORWARD, t0, tau_fin,
                                    PerturbationSet::standard(BodyId::EARTH, eph));
  PropagationConfig cfg;
  cfg.rtol = 1e-11;
  cfg.atol = 1e-13;
  const TwoArcResult r = propagate_two_arc(x.vec(), Costate::Zero(), lunar, terr, *eph,
                                           kDefaultTransitionRadiusKm, cfg);
  CHECK(std::abs(r.transition.epoch - t_cross) < 10.0);
  CHECK(std::abs(r.transition.event_residual_km) <= cfg.event_tol_km);

  // The terrestrial arc continues the same physical motion.
  const OrbitStateMee after = OrbitStateMee::from_vec(r.transition.state_after, BodyId::EARTH);
  const CartesianState ge = mee_to_cartesian(after, 1.0);
  CHECK(ge.position.norm() * bodies::earth.radius_km ==
        doctest::Approx(kDefaultTransitionRadiusKm).epsilon(1e-5));

  // Samples are ordered and carry the arc index of their center.
  const auto& s = r.trajectory.samples;
  bool increasing = true;
  for (std::size_t k = 1; k < s.size(); ++k) increasing = increasing && s[k].tau_s > s[k - 1].tau_s;
  CHECK(increasing);
  CHECK(s.front().arc == 1);
  CHECK(s.back().arc == 5);

  // Stopping before the crossing reports the missing transition.
  const ArcModel short_lunar = coast_model(BodyId::MOON, Direction::FORWARD, t0, 3600.0,
                                           PerturbationSet::standard(BodyId::MOON, eph));
  CHECK_THROWS_AS(propagate_two_arc(x.vec(), Costate::Zero(), short_lunar, terr, *eph,
                                    kDefaultTransitionRadiusKm, cfg),
                  NoTransition);
}

TEST_CASE("propagation failures") {
  Vec6 x0;
  x0 << 2.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  PropagationConfig cfg;
  cfg.record = false;
  // Full thrust for longer than the propellant lasts.
  const ArcModel m = make_arc_model(BodyId::MOON, Direction::FORWARD, 0.0, 1e8, 4.903e-7, 30.0,
                                    PerturbationSet::none(BodyId::MOON));
  CHECK_THROWS_AS(propagate_arc(x0, Costate::Ones(), 0.0, 1e8, m, cfg), PropellantExhausted);

  const ArcModel coast = make_arc_model(BodyId::MOON, Direction::FORWARD, 0.0, 1e5, 0.0, 30.0,
                                        PerturbationSet::none(BodyId::MOON));
  Vec6 bad = x0;
  bad[0] = -1.0;
  CHECK_THROWS_AS(propagate_arc(bad, Costate::Zero(), 0.0, 1e5, coast, cfg), InvalidInput);

  // Running out of step budget reports where it stopped.
  PropagationConfig tiny = cfg;
  tiny.max_steps = 5;
  try {
    propagate_arc(x0, Costate::Zero(), 0.0, 1e5, coast, tiny);
    FAIL("expected a propagation error");
  } catch (const PropagationError& e) {
    CHECK(e.last_good_tau_s() > 0.0);
    CHECK(e.last_good_tau_s() < 1e5);
  }
}

TEST_CASE("trajectory CSV round trip") {
  const Vec6 x0 = gateway_du();
  const ArcModel m = make_arc_model(BodyId::MOON, Direction::FORWARD, 0.0, 86400.0, 4.903e-7, 30.0,
                                    PerturbationSet::none(BodyId::MOON));
  PropagationConfig cfg;
  cfg.sample_spacing_s = 3600.0;
  Costate lam;
  lam << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  const ArcResult r = propagate_arc(x0, lam, 0.0, 86400.0, m, cfg);
  std::stringstream ss;
  write_trajectory_csv(ss, r.trajectory);
  CHECK(ss.str().rfind(kTrajectoryHeader, 0) == 0);
  const Trajectory back = read_trajectory_csv(ss);
  REQUIRE(back.samples.size() == r.trajectory.samples.size());
  CHECK(back.samples.size() == 25);
  for (std::size_t k = 0; k < back.samples.size(); ++k) {
    const auto& a = back.samples[k];
    const auto& b = r.trajectory.samples[k];
    CHECK(a.tau_s == b.tau_s);
    CHECK((a.x - b.x).norm() <= 1e-15 * b.x.norm());
    CHECK(a.lambda == b.lambda);
    CHECK(a.mass_ratio == b.mass_ratio);
    CHECK(a.arc == 1);
  }

  std::stringstream wrong("tau_s,epoch_s\n1,2\n");
  CHECK_THROWS_AS(read_trajectory_csv(wrong), ParseError);
  std::stringstream short_row(std::string(kTrajectoryHeader) + "\n1,2,3\n");
  CHECK_THROWS_AS(read_trajectory_csv(short_row), ParseError);
}

TEST_CASE("Hamiltonian across the junction in a self-consistent Earth-Moon model") {
  const auto eph = std::make_shared<oracle::CircularMoonProvider>();
  const double t0 = 0.0;
  const Vec3 to_earth = eci_to_mci(-eph->body_state(BodyId::MOON, t0, BodyId::EARTH).position).normalized();
  const Vec3 side = Vec3::UnitZ().cross(to_earth).normalized();
  for (Direction d : {Direction::FORWARD, Direction::BACKWARD}) {
    // Outbound towards the Earth in the direction of propagation.
    const double radial = d == Direction::FORWARD ? 0.8 : -0.8;
    OrbitStateMee x = cartesian_to_mee(
        {1e4 * to_earth, radial * to_earth + 0.5 * side, FrameTag::MCI, BodyId::MOON},
        bodies::moon.mu_km3s2);
    x.p /= bodies::moon.radius_km;
    const ArcModel lunar = make_arc_model(BodyId::MOON, d, t0, 4 * 86400.0, 4.903e-7, 30.0,
                                          PerturbationSet(BodyId::MOON, {BodyId::EARTH}, eph));
    const ArcModel terr = make_arc_model(BodyId::EARTH, d, t0, 4 * 86400.0, 4.903e-7, 30.0,
                                         PerturbationSet(BodyId::EARTH, {BodyId::MOON}, eph));
    Costate lam;
    lam << 0.3, -0.2, 0.5, 0.1, 0.4, -0.6;
    PropagationConfig cfg;
    cfg.record = false;
    const TransitionRecord tr =
        propagate_two_arc(x.vec(), lam, lunar, terr, *eph, kDefaultTransitionRadiusKm, cfg).transition;
    // Continuous once the explicit time dependence of the translation is
    // taken out; the raw values differ by exactly that term.
    CHECK(tr.continuity_state_only_rel < 1e-6);
    CHECK(tr.continuity_rel > 1e-3);
  }
}
