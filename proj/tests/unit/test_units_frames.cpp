#include "cislunar/epoch.hpp"
#include "cislunar/error.hpp"
#include "cislunar/units_frames.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cislunar;

namespace {

// Hand-written elementary rotations, frame (not vector) convention.
Mat3 reference_rotation(int axis, double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  if (axis == 1) m << 1, 0, 0, 0, c, s, 0, -s, c;
  if (axis == 2) m << c, 0, -s, 0, 1, 0, s, 0, c;
  if (axis == 3) m << c, s, 0, -s, c, 0, 0, 0, 1;
  return m;
}

}  // namespace

TEST_CASE("elementary rotation matches the frame-rotation convention") {
  CHECK((elementary_rotation(1, 0.0).matrix() - Mat3::Identity()).norm() == 0.0);
  const Vec3 v = elementary_rotation(3, kPi / 2).apply(Vec3(1, 0, 0));
  CHECK(v.x() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v.y() == doctest::Approx(-1.0));
  CHECK(v.z() == doctest::Approx(0.0));
  for (int axis = 1; axis <= 3; ++axis) {
    const double a = 0.37 * axis;
    CHECK((elementary_rotation(axis, a).matrix() - reference_rotation(axis, a)).norm() < 1e-15);
  }
  CHECK_THROWS_AS(elementary_rotation(4, 0.1), InvalidInput);
  CHECK_THROWS_AS(elementary_rotation(1, NAN), InvalidInput);
}

TEST_CASE("ECI to MCI is R1 of the obliquity and round-trips") {
  const Mat3 expected = reference_rotation(1, 23.4 * kDeg);
  CHECK((eci_to_mci().matrix() - expected).norm() < 1e-15);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e5, 1e5);
  for (int k = 0; k < 100; ++k) {
    const Vec3 v(u(rng), u(rng), u(rng));
    CHECK((mci_to_eci(eci_to_mci(v)) - v).norm() / v.norm() < 1e-13);
  }
  CHECK(eci_to_mci().orthonormality_error() < 1e-12);
  CHECK(eci_to_mci().determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("LVLH basis rows") {
  CartesianState eq{Vec3(7000, 0, 0), Vec3(0, 7.5, 0), FrameTag::ECI, BodyId::EARTH};
  CHECK((lvlh_basis(eq).matrix() - Mat3::Identity()).norm() < 1e-15);

  // Polar orbit: the normal lies in the equatorial plane.
  CartesianState polar{Vec3(7000, 0, 0), Vec3(0, 0, 7.5), FrameTag::ECI, BodyId::EARTH};
  const RotationMatrix3 p = lvlh_basis(polar);
  const Vec3 h = polar.position.cross(polar.velocity).normalized();
  CHECK((p.matrix().row(2).transpose() - h).norm() < 1e-15);
  CHECK(std::abs(p(2, 2)) < 1e-15);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    CartesianState s{Vec3(u(rng), u(rng), u(rng)) * 1e4, Vec3(u(rng), u(rng), u(rng)),
                     FrameTag::MCI, BodyId::MOON};
    const RotationMatrix3 b = lvlh_basis(s);
    CHECK(b.orthonormality_error() < 1e-12);
    CHECK(b.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(b.apply(s.position).x() - s.position.norm()) / s.position.norm() < 1e-12);
  }
  CartesianState radial{Vec3(7000, 0, 0), Vec3(1, 0, 0), FrameTag::ECI, BodyId::EARTH};
  CHECK_THROWS_AS(lvlh_basis(radial), DegenerateGeometry);
}

TEST_CASE("canonical scale of the Moon") {
  const CanonicalScale s = canonical_scale(4902.800, 1737.400);
  CHECK(s.du_km == 1737.4);
  CHECK(s.tu_s == doctest::Approx(std::sqrt(1737.4 * 1737.4 * 1737.4 / 4902.8)).epsilon(1e-15));
  CHECK(s.mu_canonical == 1.0);
  CartesianState st{Vec3(1000, -2000, 300), Vec3(0.1, 1.2, -0.4), FrameTag::MCI, BodyId::MOON};
  const CartesianState back = s.to_physical(s.to_canonical(st));
  CHECK((back.position - st.position).norm() / st.position.norm() < 1e-13);
  CHECK((back.velocity - st.velocity).norm() / st.velocity.norm() < 1e-13);
  CHECK_THROWS_AS(canonical_scale(0.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(canonical_scale(1.0, -1.0), InvalidInput);
}

TEST_CASE("wrap_pi lands in (-pi, pi]") {
  CHECK(wrap_pi(kPi) == doctest::Approx(kPi));
  CHECK(wrap_pi(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_pi(3 * kPi + 0.1) == doctest::Approx(-kPi + 0.1));
}

TEST_CASE("UTC calendar to TDB seconds") {
  // J2000 epoch is 2000-01-01 11:58:55.816 UTC.
  CHECK(utc_to_tdb("2000-01-01T11:58:55.816Z") == doctest::Approx(0.0).epsilon(5e-3));
  CHECK(leap_seconds_at(parse_calendar("2025-05-25T00:00:00Z")) == 37.0);
  const double t = utc_to_tdb("2025-05-25T16:51:30Z");
  CHECK(tdb_to_utc_string(t) == "2025-05-25T16:51:30Z");
  CHECK(utc_to_tdb("2025-05-25 16:51:30 UTC") == t);
  CHECK_THROWS_AS(parse_calendar("2025-13-01T00:00:00Z"), InvalidInput);
  CHECK_THROWS_AS(parse_calendar("yesterday"), InvalidInput);
}
