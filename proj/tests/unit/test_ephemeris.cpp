#include "cislunar/epoch.hpp"
#include "cislunar/ephemeris.hpp"
#include "cislunar/error.hpp"
#include "cislunar/mee_dynamics.hpp"
#include "cislunar/multiarc.hpp"
#include "cislunar/surrogate.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace cislunar;

namespace {

const std::string kHeader = "epoch_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms\n";

std::string five_rows() {
  std::string doc = "# frame=MCI center=MOON\n" + kHeader;
  for (int k = 0; k < 5; ++k) {
    doc += std::to_string(100.0 * k) + "," + std::to_string(1000.0 + k) + ",2,3,0.01,0.02,0.03\n";
  }
  return doc;
}

std::string surrogate_path() { return std::string(CISLUNAR_TEST_DATA_DIR) + "/gateway_surrogate.csv"; }

}  // namespace

TEST_CASE("state table parsing") {
  const StateTable t = load_state_table(five_rows());
  CHECK(t.size() == 5);
  CHECK(t.frame == FrameTag::MCI);
  CHECK(t.center == BodyId::MOON);
  CHECK(t.positions[4].x() == 1004.0);
  CHECK(t.velocities[2].z() == 0.03);

  // Formatting then parsing reproduces the table bit for bit.
  const StateTable again = load_state_table(format_state_table(t));
  CHECK(again.epochs == t.epochs);
  CHECK(again.positions[3] == t.positions[3]);
}

TEST_CASE("state table errors name the row") {
  std::string doc = "# frame=MCI center=MOON\n" + kHeader +
                    "0,1,2,3,0,0,0\n"
                    "10,1,2,3,0,0,0\n"
                    "5,1,2,3,0,0,0\n"
                    "20,1,2,3,0,0,0\n"
                    "30,1,2,3,0,0,0\n";
  try {
    load_state_table(doc);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("data row 3") != std::string::npos);
  }
  CHECK_THROWS_AS(load_state_table("# frame=MCI center=MOON\n" + kHeader + "0,1,2,3,0,0\n"),
                  ParseError);
  CHECK_THROWS_AS(load_state_table("# frame=MCI center=MOON\n" + kHeader + "0,1,nan,3,0,0,0\n"),
                  ParseError);
  CHECK_THROWS_AS(load_state_table("0,1,2,3,0,0,0\n"), ParseError);
  // Fewer than four nodes.
  CHECK_THROWS_AS(load_state_table("# frame=MCI center=MOON\n" + kHeader + "0,1,2,3,0,0,0\n"),
                  ParseError);
}

TEST_CASE("Hermite interpolation is exact at nodes and bounded between them") {
  const auto analytic = std::make_shared<AnalyticProvider>();
  const double t0 = utc_to_tdb("2025-05-20T00:00:00Z");
  auto table_at = [&](double spacing, int n) {
    StateTable t;
    t.frame = FrameTag::ECI;
    t.center = BodyId::EARTH;
    for (int k = 0; k < n; ++k) {
      const double e = t0 + spacing * k;
      const CartesianState s = analytic->body_state(BodyId::MOON, e, BodyId::EARTH);
      t.epochs.push_back(e);
      t.positions.push_back(s.position);
      t.velocities.push_back(s.velocity);
    }
    return t;
  };
  const TabulatedProvider coarse(BodyId::MOON, table_at(3600.0, 49), analytic);
  const StateTable& nodes = coarse.table();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const CartesianState s = coarse.interpolate(nodes.epochs[k]);
    CHECK(s.position == nodes.positions[k]);
    CHECK(s.velocity == nodes.velocities[k]);
  }
  // Dense oracle: the generating model sampled ten times more finely.
  double worst = 0.0;
  for (double e = t0; e <= t0 + 48 * 3600.0; e += 360.0) {
    const CartesianState ref = analytic->body_state(BodyId::MOON, e, BodyId::EARTH);
    worst = std::max(worst, (coarse.interpolate(e).position - ref.position).norm());
  }
  CHECK(worst < 1e-3);  // km

  try {
    coarse.body_state(BodyId::MOON, t0 - 1.0, BodyId::EARTH);
    FAIL("expected a range error");
  } catch (const RangeError& e) {
    CHECK(e.span_begin() == t0);
    CHECK(e.span_end() == nodes.end_epoch());
  }
}

TEST_CASE("analytic Moon distance and velocity consistency") {
  const AnalyticProvider a;
  const double t0 = utc_to_tdb("2025-05-01T00:00:00Z");
  double lo = 1e300, hi = 0.0, worst_rate = 0.0;
  for (double t = t0; t < t0 + 30 * 86400.0; t += 1800.0) {
    const CartesianState s = a.body_state(BodyId::MOON, t, BodyId::EARTH);
    lo = std::min(lo, s.position.norm());
    hi = std::max(hi, s.position.norm());
    // 60 s balances truncation against roundoff in the ~1e3 rad mean anomaly.
    const Vec3 fd = (a.body_state(BodyId::MOON, t + 60.0, BodyId::EARTH).position -
                     a.body_state(BodyId::MOON, t - 60.0, BodyId::EARTH).position) / 120.0;
    worst_rate = std::max(worst_rate, (fd - s.velocity).norm() / s.velocity.norm());
  }
  CHECK(lo >= 356000.0);
  CHECK(hi <= 407000.0);
  CHECK(worst_rate < 2e-8);
  // The Earth seen from the Moon is the opposite vector, in MCI axes.
  const CartesianState moon = a.body_state(BodyId::MOON, t0, BodyId::EARTH);
  const CartesianState earth = a.body_state(BodyId::EARTH, t0, BodyId::MOON);
  CHECK((mci_to_eci(earth.position) + moon.position).norm() < 1e-6);
}

TEST_CASE("bundled Gateway surrogate") {
  const auto eph = make_default_ephemeris(surrogate_path());
  const EpochSpan span = eph->span(BodyId::GATEWAY);
  const GatewayAnchor anchor = default_gateway_anchor();
  const double period = 2 * kPi * std::sqrt(std::pow(anchor.elements.a, 3) / bodies::moon.mu_km3s2);
  CHECK(span.end - span.begin >= period);

  const ClassicalElements c = mee_to_coe(gateway_state(*eph, anchor.epoch));
  CHECK(c.a == doctest::Approx(3.916e4).epsilon(1e-9));
  CHECK(c.e == doctest::Approx(0.923).epsilon(1e-9));
  CHECK(c.i / kDeg == doctest::Approx(98.53).epsilon(1e-9));
  CHECK(c.raan / kDeg == doctest::Approx(-60.75).epsilon(1e-9));
  CHECK(c.argp / kDeg == doctest::Approx(84.05).epsilon(1e-9));
  CHECK(c.true_anomaly / kDeg == doctest::Approx(168.22).epsilon(1e-9));

  double margin = 1e300;
  for (double t = span.begin; t <= span.end; t += 300.0) {
    const CartesianState g = eph->body_state(BodyId::GATEWAY, t, BodyId::EARTH);
    margin = std::min(margin, transition_function(g));
  }
  CHECK(margin > 0.0);

  // The table is the anchor propagated by the same generator.
  const StateTable fresh = generate_gateway_surrogate(anchor, span.begin, span.end, 600.0,
                                                      make_default_ephemeris());
  const StateTable bundled = load_state_table_file(surrogate_path());
  REQUIRE(fresh.size() == bundled.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < fresh.size(); ++k)
    worst = std::max(worst, (fresh.positions[k] - bundled.positions[k]).norm());
  CHECK(worst < 1e-6);
}

TEST_CASE("body_state is deterministic") {
  const auto eph = make_default_ephemeris(surrogate_path());
  const double t = utc_to_tdb("2025-05-26T03:17:12Z");
  const CartesianState a = body_state(*eph, BodyId::GATEWAY, t, BodyId::MOON);
  const CartesianState b = body_state(*eph, BodyId::GATEWAY, t, BodyId::MOON);
  CHECK(a.position == b.position);
  CHECK(a.velocity == b.velocity);
}
