#pragma once

#include "cislunar/indirect_core.hpp"
#include "cislunar/multiarc.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cislunar {

// State, costate and one quadrature channel (parameter-condition integral).
using ExtendedState = Eigen::Matrix<double, 13, 1>;

struct PropagationConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step_tu = 0.0;  // 0: unbounded
  double initial_step_tu = 1e-3;
  double min_step_tu = 1e-12;
  long max_steps = 20'000'000;
  bool dense = true;
  double event_tol_km = 1.0;
  bool record = true;
  double sample_spacing_s = 0.0;  // 0: one sample per accepted step
  bool parameter_integral = false;
};

// Adaptive Dormand-Prince 5(4) pair with the 4th-order continuous extension.
class DormandPrince45 {
 public:
  using Rhs = std::function<ExtendedState(double, const ExtendedState&)>;

  DormandPrince45(Rhs rhs, double t0, const ExtendedState& y0, const PropagationConfig& cfg,
                  int error_components = 12);

  // One accepted step, never beyond t_limit. Returns false if t_limit was
  // already reached.
  bool step(double t_limit);

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  const ExtendedState& y() const { return y_; }
  const ExtendedState& y_prev() const { return y_prev_; }
  double last_step() const { return t_ - t_prev_; }
  long accepted() const { return accepted_; }
  long rejected() const { return rejected_; }

  // Continuous extension over the last accepted step.
  ExtendedState dense(double t) const;

 private:
  double error_norm(const ExtendedState& err, const ExtendedState& y0,
                    const ExtendedState& y1) const;

  Rhs rhs_;
  PropagationConfig cfg_;
  int error_components_;
  double t_, t_prev_, h_;
  ExtendedState y_, y_prev_, k1_;
  std::array<ExtendedState, 5> cont_;
  long accepted_ = 0;
  long rejected_ = 0;
};

struct TrajectorySample {
  double tau_s = 0.0;
  double epoch = 0.0;
  Vec6 x = Vec6::Zero();  // canonical elements of the sample's arc
  double mass_ratio = 1.0;
  Costate lambda = Costate::Zero();
  ControlAngles controls;
  HamiltonianSplit split;
  double hamiltonian = 0.0;  // per time unit of the arc
  int arc = 1;
  BodyId center = BodyId::MOON;
};

struct Trajectory {
  Direction direction = Direction::FORWARD;
  std::vector<TrajectorySample> samples;
};

struct ArcResult {
  Trajectory trajectory;
  Vec6 x_final = Vec6::Zero();
  Costate lambda_final = Costate::Zero();
  double parameter_integral = 0.0;  // per arc time unit
  double tau_final_s = 0.0;
  double h_final = 0.0;             // optimal Hamiltonian at the end, per arc time unit
  long steps = 0;
};

// Integrates state and costate on one arc from tau_begin to tau_end (s).
// Thrown errors: PropagationError (with last good tau), PropellantExhausted.
ArcResult propagate_arc(const Vec6& x0, const Costate& lambda0, double tau_begin_s,
                        double tau_end_s, const ArcModel& model, const PropagationConfig& cfg,
                        int arc_index = 1);

struct TwoArcResult {
  ArcResult lunar;
  ArcResult terrestrial;
  TransitionRecord transition;
  Trajectory trajectory;  // both arcs, arc index 1 then 5
  // Parameter integral of both arcs, per lunar time unit.
  double parameter_integral = 0.0;
};

// Lunar arc until the spacecraft reaches rho_E from the Earth, then the
// representation chain and a terrestrial arc to tau_fin. NoTransition if the
// sphere is never reached before tau_fin.
TwoArcResult propagate_two_arc(const Vec6& x0_lunar, const Costate& lambda0,
                               const ArcModel& lunar_model, const ArcModel& terrestrial_model,
                               const EphemerisProvider& ephem, double rho_e_km,
                               const PropagationConfig& cfg);

// Distance from the Earth minus rho_E for a lunar-element state.
double transition_residual(const Vec6& x_lunar_du, double epoch, const EphemerisProvider& ephem,
                           double rho_e_km);

// CSV export/import of trajectory samples; p in km.
extern const char* const kTrajectoryHeader;
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace cislunar
