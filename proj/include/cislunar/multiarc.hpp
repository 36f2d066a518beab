#pragma once

#include "cislunar/ephemeris.hpp"
#include "cislunar/indirect_core.hpp"
#include "cislunar/mee_dynamics.hpp"

#include <array>

namespace cislunar {

inline constexpr double kDefaultTransitionRadiusKm = 320000.0;

// r_E - rho_E (km); zero on the interface sphere around the Earth.
double transition_function(const CartesianState& y_earth,
                           double rho_e_km = kDefaultTransitionRadiusKm);

// The four representation changes between the lunar and terrestrial arcs:
//   A  lunar MEE (p in lunar DU)        -> lunar Cartesian, MCI axes (km, km/s)
//   B  lunar Cartesian, MCI axes        -> lunar Cartesian, ECI axes
//   C  lunar Cartesian, ECI axes        -> geocentric Cartesian, ECI axes
//   D  geocentric Cartesian             -> terrestrial MEE (p in Earth DU)
enum class ChainStep { A = 0, B = 1, C = 2, D = 3 };

Vec6 apply_step(ChainStep step, const Vec6& before, double epoch, const EphemerisProvider& ephem);
Vec6 invert_step(ChainStep step, const Vec6& after, double epoch, const EphemerisProvider& ephem);

// Lunar MEE (p in km) to terrestrial MEE (p in km); mass ratio carried over.
OrbitStateMee state_chain(const OrbitStateMee& x_moon, double epoch,
                          const EphemerisProvider& ephem);
OrbitStateMee inverse_state_chain(const OrbitStateMee& x_earth, double epoch,
                                  const EphemerisProvider& ephem);

// d(after)/d(before) for one step, at the pre-step state. A and D are exact
// (forward-mode derivatives of the element-to-Cartesian map).
Mat6 transform_jacobian(ChainStep step, const Vec6& before, double epoch,
                        const EphemerisProvider& ephem);
// Central-difference version of the same Jacobian, kept as a cross-check.
Mat6 transform_jacobian_fd(ChainStep step, const Vec6& before, double epoch,
                           const EphemerisProvider& ephem, double rel_step = 1e-6);

// Covariant transport lambda_{j+1} = J_j^{-T} lambda_j through every step,
// so that lambda_new . (J dx) = lambda_old . dx.
inline constexpr double kMaxJacobianCondition = 1e12;
Costate costate_chain(const Costate& lambda_arc1, const std::array<Mat6, 4>& jacobians);

struct TransitionRecord {
  double tau_s = 0.0;
  double epoch = 0.0;
  double event_residual_km = 0.0;
  Vec6 state_before = Vec6::Zero();  // lunar MEE, lunar DU
  Vec6 state_after = Vec6::Zero();   // terrestrial MEE, Earth DU
  Costate costate_before = Costate::Zero();
  Costate costate_after = Costate::Zero();
  std::array<Mat6, 4> jacobians{};
  // Hamiltonians per second of physical time on both sides.
  double h_before_per_s = 0.0;
  double h_after_per_s = 0.0;
  double continuity_rel = 0.0;
  // The terrestrial Hamiltonian minus the explicit-time term that the
  // epoch-dependent translation contributes; equal to h_before when the
  // costate map is consistent.
  double h_after_state_only_per_s = 0.0;
  double continuity_state_only_rel = 0.0;
};

// d(terrestrial MEE, Earth DU)/d(tau in seconds) contributed by the Moon's
// motion through step C, at fixed lunar state.
Vec6 explicit_time_rate(const Vec6& x_moon_du, double epoch, double tau_sign,
                        const EphemerisProvider& ephem);

}  // namespace cislunar
