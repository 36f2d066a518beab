#include "cislunar/indirect_core.hpp"

#include "cislunar/error.hpp"
#include "cislunar/mee_kernel.hpp"

#include <algorithm>
#include <cmath>

namespace cislunar {
namespace {

kernel::A6<double> to_array(const Vec6& x) { return {x[0], x[1], x[2], x[3], x[4], x[5]}; }

double dot6(const Costate& a, const kernel::A6<double>& b) {
  double s = 0.0;
  for (int k = 0; k < 6; ++k) s += a[k] * b[k];
  return s;
}

Vec3 thrust_vector(double a_t, const ControlAngles& u) {
  const double cb = std::cos(u.beta);
  return {a_t * std::sin(u.alpha) * cb, a_t * std::cos(u.alpha) * cb, a_t * std::sin(u.beta)};
}

ThirdBodySamples samples_at(const ArcModel& model, double tau_s) {
  if (model.perturbations.empty()) return {};
  return model.perturbations.sample(model.epoch(tau_s), model.scale);
}

// Keplerian + third-body part of the element rates (no thrust), physical
// direction of time.
kernel::A6<double> natural_rates(const kernel::A6<double>& x, const ThirdBodySamples& bodies) {
  return kernel::natural_and_thrust_rates(x, 1.0, bodies, Vec3::Zero());
}

}  // namespace

double HamiltonianSplit::switching_norm() const {
  return std::sqrt(h_r * h_r + h_theta * h_theta + h_h * h_h);
}

double HamiltonianSplit::reassemble(const Vec3& a) const {
  return h_x + h_r * a[0] + h_theta * a[1] + h_h * a[2];
}

double ArcModel::mass_ratio(double tau_s) const {
  if (u_max_kms2 == 0.0) return 1.0;
  return mass_ratio_at(tau_s, tau_fin_s, direction, u_max_kms2, c_kms);
}

double ArcModel::thrust_accel(double tau_s) const {
  if (u_max_kms2 == 0.0) return 0.0;
  return u_max_kms2 / mass_ratio(tau_s) / scale.au_kms2();
}

ArcModel make_arc_model(BodyId central, Direction direction, double epoch_at_tau0,
                        double tau_fin_s, double u_max_kms2, double c_kms,
                        PerturbationSet perturbations) {
  if (perturbations.central() != central && !perturbations.empty())
    throw InvalidInput("make_arc_model: perturbation set built for another central body");
  ArcModel m;
  m.central = central;
  m.scale = canonical_scale(central);
  m.direction = direction;
  m.epoch_at_tau0 = epoch_at_tau0;
  m.tau_fin_s = tau_fin_s;
  m.u_max_kms2 = u_max_kms2;
  m.c_kms = c_kms;
  m.perturbations = std::move(perturbations);
  return m;
}

HamiltonianSplit hamiltonian_split(const Vec6& x, const Costate& lambda, double tau_s,
                                   const ArcModel& model, const ThirdBodySamples& bodies) {
  const auto xa = to_array(x);
  const auto g = kernel::geometry(xa, 1.0);
  if (!(g.eta > 0.0) || !(x[0] > 0.0))
    throw SingularityError("hamiltonian_split: state outside the elliptic domain");
  const auto c = kernel::gauss_columns(xa, g, 1.0);
  const auto a3 = kernel::third_body_lvlh(g, bodies);
  auto nat = kernel::rates(c, a3);
  const double sg = model.sign();
  (void)tau_s;
  HamiltonianSplit hs;
  hs.h_x = sg * dot6(lambda, nat);
  hs.h_r = sg * dot6(lambda, c.col_r);
  hs.h_theta = sg * dot6(lambda, c.col_t);
  hs.h_h = sg * dot6(lambda, c.col_h);
  return hs;
}

HamiltonianSplit hamiltonian_split(const Vec6& x, const Costate& lambda, double tau_s,
                                   const ArcModel& model) {
  return hamiltonian_split(x, lambda, tau_s, model, samples_at(model, tau_s));
}

ControlAngles optimal_controls(const HamiltonianSplit& hs) {
  const double in_plane = std::hypot(hs.h_r, hs.h_theta);
  const double norm = std::hypot(in_plane, hs.h_h);
  if (!(norm > 0.0)) throw SingularControl("switching vector vanishes");
  ControlAngles u;
  u.alpha = in_plane > 0.0 ? std::atan2(-hs.h_r, -hs.h_theta) : 0.0;
  u.beta = std::asin(std::clamp(-hs.h_h / norm, -1.0, 1.0));
  return u;
}

double optimal_hamiltonian(const HamiltonianSplit& hs, double thrust_accel) {
  return hs.h_x - thrust_accel * hs.switching_norm();
}

ExtremalRates extremal_rates(const Vec6& x, const Costate& lambda, double tau_s,
                             const ArcModel& model, ControlAngles* held) {
  const ThirdBodySamples bodies = samples_at(model, tau_s);
  ExtremalRates out;
  out.split = hamiltonian_split(x, lambda, tau_s, model, bodies);
  try {
    out.controls = optimal_controls(out.split);
    if (held) *held = out.controls;
  } catch (const SingularControl&) {
    out.controls = held ? *held : ControlAngles{};
  }
  const double a_t = model.thrust_accel(tau_s);
  const Vec3 thrust = thrust_vector(a_t, out.controls);

  using D = Dual<6>;
  kernel::A6<D> xd;
  for (int k = 0; k < 6; ++k) xd[k] = D::variable(x[k], k);
  const kernel::A6<D> fd = kernel::natural_and_thrust_rates(xd, 1.0, bodies, thrust);
  const double sg = model.sign();
  for (int i = 0; i < 6; ++i) out.state[i] = sg * fd[i].v;
  for (int k = 0; k < 6; ++k) {
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += lambda[i] * fd[i].d[k];
    out.costate[k] = -sg * s;
  }
  out.hamiltonian = lambda.dot(out.state);
  return out;
}

Costate costate_rates(const Vec6& x, const Costate& lambda, double tau_s, const ArcModel& model) {
  return extremal_rates(x, lambda, tau_s, model).costate;
}

Costate costate_rates_reference(const Vec6& x, const Costate& lambda, double tau_s,
                                const ArcModel& model, double step) {
  const ThirdBodySamples bodies = samples_at(model, tau_s);
  const double a_t = model.thrust_accel(tau_s);
  auto h_star = [&](const Vec6& xx) {
    const HamiltonianSplit hs = hamiltonian_split(xx, lambda, tau_s, model, bodies);
    return optimal_hamiltonian(hs, a_t);
  };
  auto central = [&](int k, double h) {
    Vec6 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    if (xp[k] == x[k] || xm[k] == x[k])
      throw NumericalError("costate_rates_reference: step below resolution of state component " +
                           std::to_string(k));
    return (h_star(xp) - h_star(xm)) / (xp[k] - xm[k]);
  };
  Costate out;
  for (int k = 0; k < 6; ++k) {
    const double d1 = central(k, step);
    const double d2 = central(k, 0.5 * step);
    out[k] = -(4.0 * d2 - d1) / 3.0;
  }
  return out;
}

double hamiltonian_epoch_partial(const Vec6& x, const Costate& lambda, double tau_s,
                                 const ArcModel& model, const ControlAngles& u) {
  if (model.perturbations.empty()) return 0.0;
  (void)u;  // thrust terms do not depend on the epoch
  constexpr double kStep = 60.0;
  const double t = model.epoch(tau_s);
  const auto xa = to_array(x);
  const auto plus = model.perturbations.sample(t + kStep, model.scale);
  const auto minus = model.perturbations.sample(t - kStep, model.scale);
  const double hp = dot6(lambda, natural_rates(xa, plus));
  const double hm = dot6(lambda, natural_rates(xa, minus));
  // d/dt of lambda.f per second, to per time unit, with the tau sign: the
  // epoch parameter moves t with unit slope in both directions.
  return model.sign() * (hp - hm) / (2.0 * kStep) * model.scale.tu_s;
}

CanonicalTarget to_canonical(const TerminalTarget& target, const CanonicalScale& scale) {
  const double t = std::tan(0.5 * target.i_rad);
  return CanonicalTarget{target.p_km / scale.du_km, target.e * target.e, t * t};
}

ConstraintVector terminal_constraint_vector(const Vec6& x, const Costate& lam,
                                            const CanonicalTarget& target,
                                            double parameter_residual) {
  return ConstraintVector{
      x[0] - target.p,
      x[1] * x[1] + x[2] * x[2] - target.e2,
      x[3] * x[3] + x[4] * x[4] - target.tan2_half_i,
      lam[1] * x[2] - lam[2] * x[1],
      lam[3] * x[4] - lam[4] * x[3],
      lam[5],
      parameter_residual,
  };
}

bool final_hamiltonian_check(double h_final, double xi) { return h_final - xi < 0.0; }

OrbitStateMee initial_boundary_map(const TransferScenario& scenario, double epoch_param) {
  if (scenario.departure == DepartureKind::FIXED_ORBIT) return scenario.fixed_departure;
  if (!scenario.ephemeris) throw InvalidInput("initial_boundary_map: scenario has no ephemeris");
  return gateway_state(*scenario.ephemeris, epoch_param);
}

Vec6 departure_state_rate(const TransferScenario& scenario, double epoch_param,
                          const ArcModel& model) {
  const double sg = model.sign();
  if (scenario.departure == DepartureKind::FIXED_ORBIT) {
    OrbitStateMee x0 = scenario.fixed_departure;
    Vec6 x = x0.vec();
    x[0] /= model.scale.du_km;
    const auto bodies = samples_at(model, 0.0);
    const auto r = natural_rates(to_array(x), bodies);
    Vec6 out;
    for (int k = 0; k < 6; ++k) out[k] = sg * r[k];
    return out;
  }
  constexpr double kStep = 30.0;
  const OrbitStateMee a = initial_boundary_map(scenario, epoch_param + kStep);
  const OrbitStateMee b = initial_boundary_map(scenario, epoch_param - kStep);
  Vec6 d = a.vec() - b.vec();
  d[0] /= model.scale.du_km;
  d[5] = wrap_pi(d[5]);
  return sg * d / (2.0 * kStep) * model.scale.tu_s;
}

PontryaginReport pontryagin_diagnostic(const HamiltonianSplit& split0, double thrust_accel0,
                                       double gateway_pairing) {
  PontryaginReport r;
  r.h_x = split0.h_x;
  r.switching_norm = split0.switching_norm();
  r.thrust_accel = thrust_accel0;
  r.h0 = optimal_hamiltonian(split0, thrust_accel0);
  r.gateway_pairing = gateway_pairing;
  r.margin = gateway_pairing - r.h0;
  r.identity_residual = gateway_pairing - r.h_x;
  r.degenerate = !(r.switching_norm > 0.0);
  r.satisfied = r.margin >= 0.0;
  return r;
}

}  // namespace cislunar
