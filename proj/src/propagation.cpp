#include "cislunar/propagation.hpp"

#include "cislunar/error.hpp"
#include "cislunar/mee_kernel.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <algorithm>

namespace cislunar {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr int kPhaseIndex = 5;

bool state_valid(const ExtendedState& y) {
  if (!y.allFinite()) return false;
  if (!(y[0] > 0.0)) return false;
  const double eta = 1.0 + y[1] * std::cos(y[5]) + y[2] * std::sin(y[5]);
  return eta > 0.0;
}

TrajectorySample make_sample(double tau_s, const ExtendedState& y, const ArcModel& model,
                             int arc, ControlAngles held) {
  TrajectorySample s;
  s.tau_s = tau_s;
  s.epoch = model.epoch(tau_s);
  s.x = y.head<6>();
  s.lambda = y.segment<6>(6);
  s.mass_ratio = model.mass_ratio(tau_s);
  s.split = hamiltonian_split(s.x, s.lambda, tau_s, model);
  try {
    s.controls = optimal_controls(s.split);
  } catch (const SingularControl&) {
    s.controls = held;
  }
  s.hamiltonian = optimal_hamiltonian(s.split, model.thrust_accel(tau_s));
  s.arc = arc;
  s.center = model.central;
  return s;
}

using EventFn = std::function<double(double tau_s, const ExtendedState& y)>;

struct ArcRun {
  ArcResult result;
  bool event_fired = false;
};

ArcRun run_arc(const Vec6& x0, const Costate& lambda0, double tau_begin_s, double tau_end_s,
               const ArcModel& model, const PropagationConfig& cfg, int arc_index,
               const EventFn& event) {
  if (!(tau_end_s >= tau_begin_s)) throw InvalidInput("propagate_arc: tau_end before tau_begin");
  const double tu = model.scale.tu_s;
  ExtendedState y0;
  y0 << x0, lambda0, 0.0;
  if (!state_valid(y0)) throw InvalidInput("propagate_arc: initial state outside the elliptic domain");
  // Monotone in tau, so both ends bound the whole arc.
  model.mass_ratio(tau_begin_s);
  model.mass_ratio(tau_end_s);

  ControlAngles held{};
  try {
    held = optimal_controls(hamiltonian_split(x0, lambda0, tau_begin_s, model));
  } catch (const SingularControl&) {
  }

  const bool quad = cfg.parameter_integral;
  auto rhs = [&](double t_tu, const ExtendedState& y) {
    const double tau_s = t_tu * tu;
    const Vec6 x = y.head<6>();
    const Costate lam = y.segment<6>(6);
    const ExtremalRates r = extremal_rates(x, lam, tau_s, model, &held);
    ExtendedState d;
    d << r.state, r.costate, 0.0;
    if (quad) d[12] = hamiltonian_epoch_partial(x, lam, tau_s, model, r.controls);
    return d;
  };

  ArcRun run;
  ArcResult& res = run.result;
  res.trajectory.direction = model.direction;

  const double t_end = tau_end_s / tu;
  std::optional<DormandPrince45> stepper;
  try {
    stepper.emplace(rhs, tau_begin_s / tu, y0, cfg);
  } catch (const PropellantExhausted&) {
    throw;
  } catch (const Error& e) {
    throw PropagationError(std::string("propagation failed at start: ") + e.what(), tau_begin_s);
  }

  if (cfg.record) res.trajectory.samples.push_back(make_sample(tau_begin_s, y0, model, arc_index, held));
  double next_sample = tau_begin_s + cfg.sample_spacing_s;
  double g_prev = event ? event(tau_begin_s, y0) : 0.0;
  ExtendedState y_end = y0;
  double tau_stop = tau_end_s;

  while (true) {
    const double last_good = stepper->t() * tu;
    try {
      if (!stepper->step(t_end)) break;
    } catch (const PropellantExhausted&) {
      throw;
    } catch (const Error& e) {
      throw PropagationError(std::string("propagation failed: ") + e.what(), last_good);
    }
    if (stepper->accepted() > cfg.max_steps)
      throw PropagationError("step budget exhausted", last_good);
    if (!state_valid(stepper->y()))
      throw PropagationError("state left the elliptic domain", last_good);

    const double tau_now = stepper->t() * tu;
    bool stop = false;
    y_end = stepper->y();
    if (event) {
      const double g_now = event(tau_now, stepper->y());
      if (g_prev > 0.0 && g_now <= 0.0) {
        // Illinois false position on the continuous extension.
        double a = stepper->t_prev(), b = stepper->t();
        double ga = g_prev, gb = g_now;
        double tc = b;
        ExtendedState yc = stepper->y();
        int side = 0;
        for (int it = 0; it < 100; ++it) {
          tc = b - gb * (b - a) / (gb - ga);
          yc = stepper->dense(tc);
          const double gc = event(tc * tu, yc);
          if (std::abs(gc) < cfg.event_tol_km || b - a < 1e-14 * std::max(1.0, std::abs(b))) break;
          if (gc > 0.0) {
            a = tc;
            ga = gc;
            if (side == -1) gb *= 0.5;
            side = -1;
          } else {
            b = tc;
            gb = gc;
            if (side == 1) ga *= 0.5;
            side = 1;
          }
        }
        y_end = yc;
        tau_stop = tc * tu;
        stop = true;
        run.event_fired = true;
      }
      g_prev = g_now;
    }

    if (cfg.record) {
      if (cfg.sample_spacing_s > 0.0) {
        const double upto = stop ? tau_stop : tau_now;
        while (next_sample < upto) {
          res.trajectory.samples.push_back(make_sample(
              next_sample, stepper->dense(next_sample / tu), model, arc_index, held));
          next_sample += cfg.sample_spacing_s;
        }
        if (stop || stepper->t() >= t_end)
          res.trajectory.samples.push_back(make_sample(upto, y_end, model, arc_index, held));
      } else {
        res.trajectory.samples.push_back(
            make_sample(stop ? tau_stop : tau_now, y_end, model, arc_index, held));
      }
    }
    if (stop) break;
  }
  if (!run.event_fired) tau_stop = stepper->t() * tu;

  res.x_final = y_end.head<6>();
  res.lambda_final = y_end.segment<6>(6);
  res.parameter_integral = y_end[12];
  res.tau_final_s = tau_stop;
  res.steps = stepper->accepted();
  res.h_final = optimal_hamiltonian(
      hamiltonian_split(res.x_final, res.lambda_final, tau_stop, model),
      model.thrust_accel(tau_stop));
  return run;
}

}  // namespace

// ---------------------------------------------------------------------------

DormandPrince45::DormandPrince45(Rhs rhs, double t0, const ExtendedState& y0,
                                 const PropagationConfig& cfg, int error_components)
    : rhs_(std::move(rhs)),
      cfg_(cfg),
      error_components_(error_components),
      t_(t0),
      t_prev_(t0),
      h_(cfg.initial_step_tu),
      y_(y0),
      y_prev_(y0) {
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0))
    throw InvalidInput("integrator tolerances must be positive");
  k1_ = rhs_(t_, y_);
  for (auto& c : cont_) c = y0;
}

double DormandPrince45::error_norm(const ExtendedState& err, const ExtendedState& y0,
                                   const ExtendedState& y1) const {
  double sum = 0.0;
  for (int i = 0; i < error_components_; ++i) {
    const double mag = i == kPhaseIndex ? 1.0 : std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double sc = cfg_.atol + cfg_.rtol * mag;
    const double r = err[i] / sc;
    sum += r * r;
  }
  return std::sqrt(sum / error_components_);
}

bool DormandPrince45::step(double t_limit) {
  if (t_ >= t_limit) return false;
  bool rejected_before = false;
  while (true) {
    double h = h_;
    if (cfg_.max_step_tu > 0.0) h = std::min(h, cfg_.max_step_tu);
    bool last = false;
    if (h >= t_limit - t_) {
      h = t_limit - t_;
      last = true;
    }
    if (h < cfg_.min_step_tu && !last)
      throw NumericalError("step size collapsed to " + std::to_string(h));

    const ExtendedState& k1 = k1_;
    const ExtendedState k2 = rhs_(t_ + c2 * h, y_ + h * (a21 * k1));
    const ExtendedState k3 = rhs_(t_ + c3 * h, y_ + h * (a31 * k1 + a32 * k2));
    const ExtendedState k4 = rhs_(t_ + c4 * h, y_ + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const ExtendedState k5 =
        rhs_(t_ + c5 * h, y_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const ExtendedState k6 =
        rhs_(t_ + h, y_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const ExtendedState y_new =
        y_ + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const ExtendedState k7 = rhs_(t_ + h, y_new);
    const ExtendedState err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = error_norm(err, y_, y_new);
    if (!std::isfinite(en)) en = std::numeric_limits<double>::infinity();

    if (en <= 1.0) {
      const ExtendedState ydiff = y_new - y_;
      const ExtendedState bspl = h * k1 - ydiff;
      cont_[0] = y_;
      cont_[1] = ydiff;
      cont_[2] = bspl;
      cont_[3] = ydiff - h * k7 - bspl;
      cont_[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      t_prev_ = t_;
      y_prev_ = y_;
      t_ = last ? t_limit : t_ + h;
      y_ = y_new;
      k1_ = k7;
      double factor = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
      factor = std::clamp(factor, 0.2, rejected_before ? 1.0 : 5.0);
      if (!last || factor < 1.0) h_ = h * factor;
      ++accepted_;
      return true;
    }
    ++rejected_;
    rejected_before = true;
    const double factor = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
    h_ = h * factor;
    if (h_ < cfg_.min_step_tu) throw NumericalError("step size collapsed to " + std::to_string(h_));
  }
}

ExtendedState DormandPrince45::dense(double t) const {
  const double h = t_ - t_prev_;
  if (!(h > 0.0)) return y_;
  const double th = (t - t_prev_) / h;
  const double th1 = 1.0 - th;
  return cont_[0] + th * (cont_[1] + th1 * (cont_[2] + th * (cont_[3] + th1 * cont_[4])));
}

// ---------------------------------------------------------------------------

ArcResult propagate_arc(const Vec6& x0, const Costate& lambda0, double tau_begin_s,
                        double tau_end_s, const ArcModel& model, const PropagationConfig& cfg,
                        int arc_index) {
  return run_arc(x0, lambda0, tau_begin_s, tau_end_s, model, cfg, arc_index, nullptr).result;
}

double transition_residual(const Vec6& x_lunar_du, double epoch, const EphemerisProvider& ephem,
                           double rho_e_km) {
  const kernel::A6<double> a{x_lunar_du[0], x_lunar_du[1], x_lunar_du[2],
                             x_lunar_du[3], x_lunar_du[4], x_lunar_du[5]};
  const auto y = kernel::cartesian(a, 1.0);
  const double du = bodies::moon.radius_km;
  const Vec3 r_mci(y[0] * du, y[1] * du, y[2] * du);
  const Vec3 moon = ephem.body_state(BodyId::MOON, epoch, BodyId::EARTH).position;
  CartesianState st;
  st.position = mci_to_eci(r_mci) + moon;
  return transition_function(st, rho_e_km);
}

TwoArcResult propagate_two_arc(const Vec6& x0_lunar, const Costate& lambda0,
                               const ArcModel& lunar_model, const ArcModel& terrestrial_model,
                               const EphemerisProvider& ephem, double rho_e_km,
                               const PropagationConfig& cfg) {
  if (lunar_model.central != BodyId::MOON || terrestrial_model.central != BodyId::EARTH)
    throw InvalidInput("propagate_two_arc: arc models must be lunar then terrestrial");
  const double tau_fin = lunar_model.tau_fin_s;
  const double g0 = transition_residual(x0_lunar, lunar_model.epoch(0.0), ephem, rho_e_km);
  if (!(g0 > 0.0))
    throw InvalidInput("propagate_two_arc: initial state is not in the lunar regime");

  auto event = [&](double tau_s, const ExtendedState& y) {
    return transition_residual(y.head<6>(), lunar_model.epoch(tau_s), ephem, rho_e_km);
  };
  ArcRun lunar = run_arc(x0_lunar, lambda0, 0.0, tau_fin, lunar_model, cfg, 1, event);
  if (!lunar.event_fired)
    throw NoTransition("transition sphere never reached before tau_fin", lunar.result.tau_final_s);

  TwoArcResult out;
  out.lunar = std::move(lunar.result);
  TransitionRecord& tr = out.transition;
  tr.tau_s = out.lunar.tau_final_s;
  tr.epoch = lunar_model.epoch(tr.tau_s);
  tr.state_before = out.lunar.x_final;
  tr.costate_before = out.lunar.lambda_final;
  tr.event_residual_km = transition_residual(tr.state_before, tr.epoch, ephem, rho_e_km);

  Vec6 y = tr.state_before;
  const ChainStep steps[4] = {ChainStep::A, ChainStep::B, ChainStep::C, ChainStep::D};
  for (int k = 0; k < 4; ++k) {
    tr.jacobians[static_cast<std::size_t>(k)] = transform_jacobian(steps[k], y, tr.epoch, ephem);
    y = apply_step(steps[k], y, tr.epoch, ephem);
  }
  tr.state_after = y;
  tr.costate_after = costate_chain(tr.costate_before, tr.jacobians);

  const double tu_m = lunar_model.scale.tu_s;
  const double tu_e = terrestrial_model.scale.tu_s;
  tr.h_before_per_s = optimal_hamiltonian(
                          hamiltonian_split(tr.state_before, tr.costate_before, tr.tau_s, lunar_model),
                          lunar_model.thrust_accel(tr.tau_s)) /
                      tu_m;
  tr.h_after_per_s =
      optimal_hamiltonian(
          hamiltonian_split(tr.state_after, tr.costate_after, tr.tau_s, terrestrial_model),
          terrestrial_model.thrust_accel(tr.tau_s)) /
      tu_e;
  const Vec6 explicit_rate =
      explicit_time_rate(tr.state_before, tr.epoch, lunar_model.sign(), ephem);
  tr.h_after_state_only_per_s = tr.h_after_per_s - tr.costate_after.dot(explicit_rate);
  const double ref = std::max(std::abs(tr.h_before_per_s), std::numeric_limits<double>::min());
  tr.continuity_rel = std::abs(tr.h_after_per_s - tr.h_before_per_s) / ref;
  tr.continuity_state_only_rel = std::abs(tr.h_after_state_only_per_s - tr.h_before_per_s) / ref;

  out.terrestrial = propagate_arc(tr.state_after, tr.costate_after, tr.tau_s, tau_fin,
                                  terrestrial_model, cfg, 5);
  out.parameter_integral =
      out.lunar.parameter_integral + out.terrestrial.parameter_integral * (tu_m / tu_e);

  out.trajectory.direction = lunar_model.direction;
  out.trajectory.samples = out.lunar.trajectory.samples;
  if (!out.trajectory.samples.empty()) out.trajectory.samples.pop_back();
  for (const auto& s : out.terrestrial.trajectory.samples) out.trajectory.samples.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------

const char* const kTrajectoryHeader =
    "tau_s,epoch_s,p,l,m,n,s,q,mr,lam1,lam2,lam3,lam4,lam5,lam6,alpha_rad,beta_rad,arc";

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << kTrajectoryHeader << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (const auto& s : traj.samples) {
    const double du = constants_of(s.center).radius_km;
    num(s.tau_s);
    out << ',';
    num(s.epoch);
    for (int k = 0; k < 6; ++k) {
      out << ',';
      num(k == 0 ? s.x[0] * du : s.x[k]);
    }
    out << ',';
    num(s.mass_ratio);
    for (int k = 0; k < 6; ++k) {
      out << ',';
      num(s.lambda[k]);
    }
    out << ',';
    num(s.controls.alpha);
    out << ',';
    num(s.controls.beta);
    out << ',' << s.arc << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty trajectory file", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) throw ParseError("unexpected trajectory header", line_no);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size() && cell.substr(used) != "\r")
          throw ParseError("bad number '" + cell + "'", line_no);
      } catch (const std::logic_error&) {
        throw ParseError("bad number '" + cell + "'", line_no);
      }
    }
    if (v.size() != 18) throw ParseError("expected 18 columns", line_no);
    TrajectorySample s;
    s.tau_s = v[0];
    s.epoch = v[1];
    s.arc = static_cast<int>(v[17]);
    s.center = s.arc == 5 ? BodyId::EARTH : BodyId::MOON;
    const double du = constants_of(s.center).radius_km;
    for (int k = 0; k < 6; ++k) s.x[k] = v[2 + k];
    s.x[0] /= du;
    s.mass_ratio = v[8];
    for (int k = 0; k < 6; ++k) s.lambda[k] = v[9 + k];
    s.controls.alpha = v[15];
    s.controls.beta = v[16];
    traj.samples.push_back(s);
  }
  if (traj.samples.size() >= 2) {
    traj.direction = traj.samples[1].epoch >= traj.samples[0].epoch ? Direction::FORWARD
                                                                     : Direction::BACKWARD;
  }
  return traj;
}

}  // namespace cislunar
