#include "cislunar/epoch.hpp"
#include "cislunar/error.hpp"
#include "cislunar/indirect_core.hpp"
#include "cislunar/surrogate.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cislunar;

namespace {

std::string surrogate_path() { return std::string(CISLUNAR_TEST_DATA_DIR) + "/gateway_surrogate.csv"; }

// Third-body acceleration in LVLH, canonical units, from the physical
// ephemeris and the extended-precision oracle.
Vec3 perturbation_lvlh(const Vec6& x, const ArcModel& m, double epoch) {
  const OrbitStateMee s = OrbitStateMee::from_vec(x, m.central);
  const CartesianState y = mee_to_cartesian(s, 1.0);
  Vec3 a = Vec3::Zero();
  for (BodyId b : m.perturbations.bodies()) {
    const Vec3 rb = m.perturbations.ephemeris()->body_state(b, epoch, m.central).position;
    a += oracle::third_body_long_double(y.position * m.scale.du_km, rb, constants_of(b).mu_km3s2);
  }
  return lvlh_basis(y).matrix() * a / m.scale.au_kms2();
}

struct Fixture {
  std::shared_ptr<const CompositeProvider> eph = make_default_ephemeris(surrogate_path());
  double t0 = utc_to_tdb("2025-05-26T00:00:00Z");

  ArcModel model(Direction d, BodyId central = BodyId::MOON) const {
    return make_arc_model(central, d, t0, 30 * 86400.0, 4.903e-7, 30.0,
                          PerturbationSet::standard(central, eph));
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "extremal state rates are the signed Gauss rates") {
  std::mt19937_64 rng(5);
  for (Direction d : {Direction::FORWARD, Direction::BACKWARD}) {
    const ArcModel m = model(d);
    for (int k = 0; k < 20; ++k) {
      const Vec6 x = coe_to_mee(oracle::random_elements(rng, 2.0, 20.0, 0.8)).vec();
      Costate lam;
      for (int j = 0; j < 6; ++j) lam[j] = std::normal_distribution<double>()(rng);
      const double tau = 86400.0 * k;
      const ExtremalRates r = extremal_rates(x, lam, tau, m);
      const double a_t = m.thrust_accel(tau);
      const double cb = std::cos(r.controls.beta);
      const Vec3 thrust = a_t * Vec3(std::sin(r.controls.alpha) * cb,
                                     std::cos(r.controls.alpha) * cb, std::sin(r.controls.beta));
      const Vec3 total = thrust + perturbation_lvlh(x, m, m.epoch(tau));
      const Vec6 expect = m.sign() * gauss_rates(OrbitStateMee::from_vec(x, m.central), total, 1.0);
      CHECK((r.state - expect).norm() < 1e-11 * expect.norm());
      CHECK(r.hamiltonian == doctest::Approx(lam.dot(expect)).epsilon(1e-10));
      CHECK(r.hamiltonian == doctest::Approx(optimal_hamiltonian(r.split, a_t)).epsilon(1e-10));
      CHECK(r.split.reassemble(thrust) == doctest::Approx(r.hamiltonian).epsilon(1e-10));
    }
  }
}

TEST_CASE_FIXTURE(Fixture, "optimal control beats sampled directions") {
  std::mt19937_64 rng(9);
  const ArcModel m = model(Direction::BACKWARD);
  for (int k = 0; k < 20; ++k) {
    const Vec6 x = coe_to_mee(oracle::random_elements(rng, 2.0, 20.0, 0.8)).vec();
    Costate lam;
    for (int j = 0; j < 6; ++j) lam[j] = std::normal_distribution<double>()(rng);
    const HamiltonianSplit hs = hamiltonian_split(x, lam, 0.0, m);
    const ControlAngles u = optimal_controls(hs);
    const double cb = std::cos(u.beta);
    const double best = hs.reassemble(Vec3(std::sin(u.alpha) * cb, std::cos(u.alpha) * cb,
                                           std::sin(u.beta)));
    bool beaten = false;
    for (int s = 0; s < 2000; ++s)
      beaten = beaten || hs.reassemble(oracle::random_unit(rng)) < best - 1e-14 * std::abs(best);
    CHECK_FALSE(beaten);
    CHECK(best == doctest::Approx(optimal_hamiltonian(hs, 1.0)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(optimal_controls(HamiltonianSplit{1.0, 0.0, 0.0, 0.0}), SingularControl);
}

TEST_CASE_FIXTURE(Fixture, "singular point holds the previous control") {
  const ArcModel m = model(Direction::FORWARD);
  Vec6 x;
  x << 3.0, 0.1, 0.05, 0.2, -0.1, 0.4;
  Costate lam = Costate::Zero();  // switching vector vanishes
  ControlAngles held{0.3, -0.2};
  const ExtremalRates r = extremal_rates(x, lam, 0.0, m, &held);
  CHECK(r.controls.alpha == 0.3);
  CHECK(r.controls.beta == -0.2);
  CHECK(held.alpha == 0.3);
}

TEST_CASE_FIXTURE(Fixture, "costate rates agree with the finite-difference reference") {
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (Direction d : {Direction::FORWARD, Direction::BACKWARD}) {
    for (BodyId c : {BodyId::MOON, BodyId::EARTH}) {
      const ArcModel m = model(d, c);
      for (int k = 0; k < 15; ++k) {
        const Vec6 x = coe_to_mee(oracle::random_elements(rng, 1.5, 20.0, 0.8)).vec();
        Costate lam;
        for (int j = 0; j < 6; ++j) lam[j] = std::normal_distribution<double>()(rng);
        const Costate ad = costate_rates(x, lam, 3600.0 * k, m);
        const Costate fd = costate_rates_reference(x, lam, 3600.0 * k, m);
        worst = std::max(worst, (ad - fd).norm() / fd.norm());
      }
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE_FIXTURE(Fixture, "epoch partial of the Hamiltonian") {
  std::mt19937_64 rng(4);
  for (Direction d : {Direction::FORWARD, Direction::BACKWARD}) {
    ArcModel m = model(d);
    const Vec6 x = coe_to_mee(oracle::random_elements(rng, 10.0, 30.0, 0.5)).vec();
    Costate lam;
    for (int j = 0; j < 6; ++j) lam[j] = std::normal_distribution<double>()(rng);
    const double tau = 5 * 86400.0;
    const double got = hamiltonian_epoch_partial(x, lam, tau, m, {});
    // Oracle: move the epoch parameter itself, step 5 s with Richardson.
    auto h_at = [&](double shift) {
      ArcModel mm = m;
      mm.epoch_at_tau0 += shift;
      return hamiltonian_split(x, lam, tau, mm).h_x;
    };
    const double d1 = (h_at(10.0) - h_at(-10.0)) / 20.0;
    const double d2 = (h_at(5.0) - h_at(-5.0)) / 10.0;
    const double ref = (4.0 * d2 - d1) / 3.0 * m.scale.tu_s;
    CHECK(got == doctest::Approx(ref).epsilon(1e-4));
  }
  ArcModel plain = model(Direction::FORWARD);
  plain.perturbations = PerturbationSet::none(BodyId::MOON);
  CHECK(hamiltonian_epoch_partial(Vec6(2, 0, 0, 0, 0, 0), Costate::Ones(), 0.0, plain, {}) == 0.0);
}

TEST_CASE("terminal constraints vanish on the target") {
  TerminalTarget t{3474.8 / 1.0, 0.0, kPi / 2, BodyId::MOON};
  const CanonicalScale sc = canonical_scale(BodyId::MOON);
  const CanonicalTarget ct = to_canonical(t, sc);
  CHECK(ct.p == doctest::Approx(2.0));
  CHECK(ct.tan2_half_i == doctest::Approx(1.0));

  Vec6 x;
  const double phi = 0.7;
  x << 2.0, 0.0, 0.0, std::cos(phi), std::sin(phi), 1.3;
  Costate lam;
  lam << 0.4, 0.0, 0.0, 2.0 * std::cos(phi), 2.0 * std::sin(phi), 0.0;
  const ConstraintVector y = terminal_constraint_vector(x, lam, ct, 0.0);
  for (double v : y) CHECK(std::abs(v) < 1e-15);

  Vec6 x2 = x;
  x2[1] = 0.3;
  const ConstraintVector y2 = terminal_constraint_vector(x2, lam, ct, 0.25);
  CHECK(y2[1] == doctest::Approx(0.09));
  CHECK(y2[6] == 0.25);

  CHECK(final_hamiltonian_check(-1e-12));
  CHECK_FALSE(final_hamiltonian_check(0.0));
  CHECK_FALSE(final_hamiltonian_check(-0.5, -1.0));
}

TEST_CASE_FIXTURE(Fixture, "departure rate and Pontryagin diagnostic") {
  TransferScenario sc;
  sc.ephemeris = eph;
  sc.direction = Direction::FORWARD;
  const ArcModel m = model(Direction::FORWARD);
  const OrbitStateMee g = initial_boundary_map(sc, t0);
  const OrbitStateMee direct = gateway_state(*eph, t0);
  CHECK(g.vec() == direct.vec());

  // The Gateway coasts in the same perturbed model, so its element rate is
  // the natural Gauss rate of its own state.
  Vec6 x = g.vec();
  x[0] /= m.scale.du_km;
  const Vec6 ref = gauss_rates(OrbitStateMee::from_vec(x, BodyId::MOON),
                               perturbation_lvlh(x, m, t0), 1.0);
  const Vec6 rate = departure_state_rate(sc, t0, m);
  CHECK((rate - ref).norm() < 1e-5 * ref.norm());

  Costate lam;
  lam << 0.3, -0.5, 0.2, 0.1, 0.7, -0.2;
  const HamiltonianSplit hs = hamiltonian_split(x, lam, 0.0, m);
  const double a_t = m.thrust_accel(0.0);
  const PontryaginReport pr = pontryagin_diagnostic(hs, a_t, lam.dot(rate));
  CHECK(std::abs(pr.identity_residual) < 1e-5 * lam.norm() * ref.norm());
  CHECK(pr.margin == doctest::Approx(a_t * hs.switching_norm()).epsilon(1e-3));
  CHECK(pr.satisfied);

  // A fixed departure orbit moves only along the true longitude without
  // perturbations.
  TransferScenario fixed;
  fixed.departure = DepartureKind::FIXED_ORBIT;
  fixed.fixed_departure = coe_to_mee({2084.88, 0.0, 0.0, 0.0, 0.0, 0.0});
  ArcModel plain = make_arc_model(BodyId::MOON, Direction::BACKWARD, t0, 86400.0, 4.903e-7,
                                  30.0, PerturbationSet::none(BodyId::MOON));
  const Vec6 fr = departure_state_rate(fixed, t0, plain);
  CHECK(fr.head<5>().norm() == 0.0);
  CHECK(fr[5] == doctest::Approx(-std::pow(2084.88 / 1737.4, -1.5)));
}
