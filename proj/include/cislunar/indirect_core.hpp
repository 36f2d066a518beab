#pragma once

#include "cislunar/ephemeris.hpp"
#include "cislunar/mee_dynamics.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>

namespace cislunar {

using Costate = Vec6;
using ConstraintVector = std::array<double, 7>;

// H = h_x + h_r a_r + h_theta a_theta + h_h a_h, with every term already
// carrying the sign of the tau-domain dynamics (negated when backward).
struct HamiltonianSplit {
  double h_x = 0.0;
  double h_r = 0.0;
  double h_theta = 0.0;
  double h_h = 0.0;

  double switching_norm() const;
  double reassemble(const Vec3& a_thrust_lvlh) const;
};

struct ControlAngles {
  double alpha = 0.0;
  double beta = 0.0;
};

// Everything the tau-domain equations need on one arc. tau is measured in
// seconds from the start of the transfer for every arc; inside an arc the
// integrator uses the arc's time unit.
struct ArcModel {
  BodyId central = BodyId::MOON;
  CanonicalScale scale;
  Direction direction = Direction::FORWARD;
  double epoch_at_tau0 = 0.0;  // t0 when forward, t_f when backward
  double tau_fin_s = 0.0;
  double u_max_kms2 = 0.0;     // zero switches thrust off
  double c_kms = 30.0;
  PerturbationSet perturbations;

  double sign() const { return direction == Direction::FORWARD ? 1.0 : -1.0; }
  double epoch(double tau_s) const { return epoch_at_tau0 + sign() * tau_s; }
  double mass_ratio(double tau_s) const;
  // Thrust acceleration magnitude in canonical units at tau.
  double thrust_accel(double tau_s) const;
  double mu() const { return 1.0; }
};

ArcModel make_arc_model(BodyId central, Direction direction, double epoch_at_tau0,
                        double tau_fin_s, double u_max_kms2, double c_kms,
                        PerturbationSet perturbations);

HamiltonianSplit hamiltonian_split(const Vec6& x, const Costate& lambda, double tau_s,
                                   const ArcModel& model);
HamiltonianSplit hamiltonian_split(const Vec6& x, const Costate& lambda, double tau_s,
                                   const ArcModel& model, const ThirdBodySamples& bodies);

// Minimizing thrust direction. Throws SingularControl when the switching
// vector vanishes.
ControlAngles optimal_controls(const HamiltonianSplit& hs);

// Hamiltonian at the optimal control, full thrust.
double optimal_hamiltonian(const HamiltonianSplit& hs, double thrust_accel);

// State and costate derivatives with respect to tau (arc time unit).
struct ExtremalRates {
  Vec6 state;
  Costate costate;
  HamiltonianSplit split;
  ControlAngles controls;
  double hamiltonian = 0.0;
};

// `held` carries the last regular control; it is used (and not updated)
// when the switching vector vanishes.
ExtremalRates extremal_rates(const Vec6& x, const Costate& lambda, double tau_s,
                             const ArcModel& model, ControlAngles* held = nullptr);

// dlambda/dtau = -dH/dx with exact forward-mode derivatives.
Costate costate_rates(const Vec6& x, const Costate& lambda, double tau_s, const ArcModel& model);

// Same quantity by central differences (step 1e-7, one Richardson pass) of
// the Hamiltonian re-minimized at every perturbed state.
Costate costate_rates_reference(const Vec6& x, const Costate& lambda, double tau_s,
                                const ArcModel& model, double step = 1e-7);

// dH/d(epoch parameter) along the arc at fixed state, costate and control,
// per arc time unit squared: the integrand of the parameter condition.
double hamiltonian_epoch_partial(const Vec6& x, const Costate& lambda, double tau_s,
                                 const ArcModel& model, const ControlAngles& u);

// Terminal orbit in physical units, converted per arc by to_canonical().
struct TerminalTarget {
  double p_km = 0.0;
  double e = 0.0;
  double i_rad = 0.0;
  BodyId center = BodyId::MOON;
};

struct CanonicalTarget {
  double p = 0.0;
  double e2 = 0.0;
  double tan2_half_i = 0.0;
};
CanonicalTarget to_canonical(const TerminalTarget& target, const CanonicalScale& scale);

// Y1..Y3 target conditions, Y4..Y6 costate transversality, Y7 the supplied
// parameter-condition residual.
ConstraintVector terminal_constraint_vector(const Vec6& x_f, const Costate& lambda_f,
                                            const CanonicalTarget& target,
                                            double parameter_residual);

bool final_hamiltonian_check(double h_final, double xi = 0.0);

// Where the tau = 0 state comes from.
enum class DepartureKind { GATEWAY, FIXED_ORBIT };

struct TransferScenario {
  std::string id;
  Direction direction = Direction::FORWARD;
  DepartureKind departure = DepartureKind::GATEWAY;
  OrbitStateMee fixed_departure;  // p in km; used when departure == FIXED_ORBIT
  BodyId departure_center = BodyId::MOON;
  TerminalTarget target;
  double u_max_kms2 = 4.903e-7;
  double c_kms = 30.0;
  double epoch_lo = 0.0;  // search window for t0 (forward) or t_f (backward)
  double epoch_hi = 0.0;
  double tof_lo_s = 0.0;
  double tof_hi_s = 0.0;
  bool multi_arc = false;
  double rho_e_km = 320000.0;
  bool perturbations = true;
  std::shared_ptr<const EphemerisProvider> ephemeris;
};

// Departure state at the epoch parameter, p in km.
OrbitStateMee initial_boundary_map(const TransferScenario& scenario, double epoch_param);

// d(x_G)/d(tau) at tau = 0 (canonical units of the departure arc), by
// central differences of the Gateway ephemeris; zero for fixed orbits whose
// motion is Keplerian, in which case the natural drift is returned.
Vec6 departure_state_rate(const TransferScenario& scenario, double epoch_param,
                          const ArcModel& model);

struct PontryaginReport {
  double h0 = 0.0;              // H at tau = 0 under the optimal control
  double h_x = 0.0;
  double switching_norm = 0.0;  // sqrt(h_r^2 + h_theta^2 + h_h^2)
  double thrust_accel = 0.0;
  double gateway_pairing = 0.0;  // lambda_i . d x_G / d tau
  double margin = 0.0;           // gateway_pairing - h0
  double identity_residual = 0.0;  // gateway_pairing - h_x
  bool degenerate = false;
  bool satisfied = false;
};

PontryaginReport pontryagin_diagnostic(const HamiltonianSplit& split0, double thrust_accel0,
                                       double gateway_pairing);

}  // namespace cislunar
