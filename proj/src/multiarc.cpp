#include "cislunar/multiarc.hpp"

#include "cislunar/error.hpp"
#include "cislunar/mee_kernel.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>

namespace cislunar {
namespace {

const CanonicalScale& lunar_scale() {
  static const CanonicalScale s = canonical_scale(BodyId::MOON);
  return s;
}
const CanonicalScale& terrestrial_scale() {
  static const CanonicalScale s = canonical_scale(BodyId::EARTH);
  return s;
}

Vec6 moon_state_eci(double epoch, const EphemerisProvider& ephem) {
  return ephem.body_state(BodyId::MOON, epoch, BodyId::EARTH).stacked();
}

Vec6 rotate_block(const Mat3& r, const Vec6& y) {
  Vec6 out;
  out << r * y.head<3>(), r * y.tail<3>();
  return out;
}

Mat3 mci_to_eci_matrix() { return eci_to_mci().matrix().transpose(); }

// Elements (canonical p) -> Cartesian (km, km/s) and its exact Jacobian.
Mat6 element_to_cartesian_jacobian(const Vec6& x, const CanonicalScale& sc) {
  using D = Dual<6>;
  kernel::A6<D> xd;
  for (int k = 0; k < 6; ++k) xd[k] = D::variable(x[k], k);
  const auto y = kernel::cartesian(xd, 1.0);
  Mat6 j;
  for (int i = 0; i < 6; ++i) {
    const double unit = i < 3 ? sc.du_km : sc.vu_kms();
    for (int k = 0; k < 6; ++k) j(i, k) = unit * y[i].d[k];
  }
  return j;
}

Vec6 elements_to_cartesian(const Vec6& x, const CanonicalScale& sc) {
  const kernel::A6<double> a{x[0], x[1], x[2], x[3], x[4], x[5]};
  if (!(x[0] > 0.0)) throw SingularityError("chain: p must be positive");
  const double eta = 1.0 + x[1] * std::cos(x[5]) + x[2] * std::sin(x[5]);
  if (!(eta > 0.0)) throw SingularityError("chain: hyperbolic branch");
  const auto y = kernel::cartesian(a, 1.0);
  Vec6 out;
  for (int i = 0; i < 6; ++i) out[i] = y[i] * (i < 3 ? sc.du_km : sc.vu_kms());
  return out;
}

Vec6 cartesian_to_elements(const Vec6& y, const CanonicalScale& sc, BodyId center) {
  const CartesianState st = CartesianState::from_stacked(
      y, center == BodyId::EARTH ? FrameTag::ECI : FrameTag::MCI, center);
  OrbitStateMee x = cartesian_to_mee(st, sc.mu_km3s2);
  x.p /= sc.du_km;
  return x.vec();
}

}  // namespace

double transition_function(const CartesianState& y_earth, double rho_e_km) {
  return y_earth.position.norm() - rho_e_km;
}

Vec6 apply_step(ChainStep step, const Vec6& before, double epoch, const EphemerisProvider& ephem) {
  switch (step) {
    case ChainStep::A: return elements_to_cartesian(before, lunar_scale());
    case ChainStep::B: return rotate_block(mci_to_eci_matrix(), before);
    case ChainStep::C: return before + moon_state_eci(epoch, ephem);
    case ChainStep::D: return cartesian_to_elements(before, terrestrial_scale(), BodyId::EARTH);
  }
  throw InvalidInput("apply_step: unknown step");
}

Vec6 invert_step(ChainStep step, const Vec6& after, double epoch, const EphemerisProvider& ephem) {
  switch (step) {
    case ChainStep::A: return cartesian_to_elements(after, lunar_scale(), BodyId::MOON);
    case ChainStep::B: return rotate_block(eci_to_mci().matrix(), after);
    case ChainStep::C: return after - moon_state_eci(epoch, ephem);
    case ChainStep::D: return elements_to_cartesian(after, terrestrial_scale());
  }
  throw InvalidInput("invert_step: unknown step");
}

OrbitStateMee state_chain(const OrbitStateMee& x_moon, double epoch,
                          const EphemerisProvider& ephem) {
  if (x_moon.center != BodyId::MOON) throw InvalidInput("state_chain: input must be lunar MEE");
  Vec6 x = x_moon.vec();
  x[0] /= lunar_scale().du_km;
  for (ChainStep s : {ChainStep::A, ChainStep::B, ChainStep::C, ChainStep::D})
    x = apply_step(s, x, epoch, ephem);
  x[0] *= terrestrial_scale().du_km;
  return OrbitStateMee::from_vec(x, BodyId::EARTH, x_moon.mass_ratio);
}

OrbitStateMee inverse_state_chain(const OrbitStateMee& x_earth, double epoch,
                                  const EphemerisProvider& ephem) {
  if (x_earth.center != BodyId::EARTH)
    throw InvalidInput("inverse_state_chain: input must be terrestrial MEE");
  Vec6 x = x_earth.vec();
  x[0] /= terrestrial_scale().du_km;
  for (ChainStep s : {ChainStep::D, ChainStep::C, ChainStep::B, ChainStep::A})
    x = invert_step(s, x, epoch, ephem);
  x[0] *= lunar_scale().du_km;
  return OrbitStateMee::from_vec(x, BodyId::MOON, x_earth.mass_ratio);
}

Mat6 transform_jacobian(ChainStep step, const Vec6& before, double epoch,
                        const EphemerisProvider& ephem) {
  switch (step) {
    case ChainStep::A: return element_to_cartesian_jacobian(before, lunar_scale());
    case ChainStep::B: {
      Mat6 j = Mat6::Zero();
      j.topLeftCorner<3, 3>() = mci_to_eci_matrix();
      j.bottomRightCorner<3, 3>() = mci_to_eci_matrix();
      return j;
    }
    case ChainStep::C: return Mat6::Identity();
    case ChainStep::D: {
      const Vec6 after = apply_step(ChainStep::D, before, epoch, ephem);
      return element_to_cartesian_jacobian(after, terrestrial_scale()).inverse();
    }
  }
  throw InvalidInput("transform_jacobian: unknown step");
}

Mat6 transform_jacobian_fd(ChainStep step, const Vec6& before, double epoch,
                           const EphemerisProvider& ephem, double rel_step) {
  Mat6 j;
  for (int k = 0; k < 6; ++k) {
    const double h = rel_step * std::max(1.0, std::abs(before[k]));
    Vec6 xp = before, xm = before;
    xp[k] += h;
    xm[k] -= h;
    Vec6 d = apply_step(step, xp, epoch, ephem) - apply_step(step, xm, epoch, ephem);
    if (step == ChainStep::D) d[5] = wrap_pi(d[5]);
    j.col(k) = d / (xp[k] - xm[k]);
  }
  return j;
}

Costate costate_chain(const Costate& lambda_arc1, const std::array<Mat6, 4>& jacobians) {
  Costate lam = lambda_arc1;
  for (std::size_t k = 0; k < jacobians.size(); ++k) {
    const Mat6& j = jacobians[k];
    Eigen::JacobiSVD<Mat6> svd(j);
    const auto& sv = svd.singularValues();
    const double cond = sv[5] > 0.0 ? sv[0] / sv[5] : INFINITY;
    if (!(cond <= kMaxJacobianCondition))
      throw ConditioningError("costate_chain: Jacobian of step " + std::to_string(k + 1) +
                                  " is ill-conditioned",
                              cond);
    lam = j.transpose().partialPivLu().solve(lam);
  }
  return lam;
}

Vec6 explicit_time_rate(const Vec6& x_moon_du, double epoch, double tau_sign,
                        const EphemerisProvider& ephem) {
  constexpr double kStep = 60.0;
  const Vec6 moon = moon_state_eci(epoch, ephem);
  const Vec3 acc = (ephem.body_state(BodyId::MOON, epoch + kStep, BodyId::EARTH).velocity -
                    ephem.body_state(BodyId::MOON, epoch - kStep, BodyId::EARTH).velocity) /
                   (2.0 * kStep);
  Vec6 dy;
  dy << moon.tail<3>(), acc;
  Vec6 y = x_moon_du;
  for (ChainStep s : {ChainStep::A, ChainStep::B, ChainStep::C}) y = apply_step(s, y, epoch, ephem);
  const Mat6 jd = transform_jacobian(ChainStep::D, y, epoch, ephem);
  return tau_sign * jd * dy;
}

}  // namespace cislunar
