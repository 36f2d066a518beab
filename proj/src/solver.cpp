#include "cislunar/solver.hpp"

#include "cislunar/epoch.hpp"
#include "cislunar/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace cislunar {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PerturbationSet perturbations_for(const TransferScenario& s, BodyId central) {
  return s.perturbations ? PerturbationSet::standard(central, s.ephemeris)
                         : PerturbationSet::none(central);
}

double finite_or_inf(double v) { return std::isfinite(v) ? v : kInf; }

}  // namespace

std::vector<double> UnknownVector::to_vector() const {
  std::vector<double> v{epoch, tof_s};
  for (int k = 0; k < 6; ++k) v.push_back(lambda[k]);
  return v;
}

UnknownVector UnknownVector::from_vector(const std::vector<double>& v) {
  if (v.size() != 8) throw InvalidInput("unknown vector must have 8 entries");
  UnknownVector x;
  x.epoch = v[0];
  x.tof_s = v[1];
  for (int k = 0; k < 6; ++k) x.lambda[k] = v[2 + static_cast<std::size_t>(k)];
  return x;
}

void DeConfig::validate() const {
  if (population < 5) throw InvalidInput("de.population must be at least 5");
  if (!(weight > 0.0 && weight <= 2.0)) throw InvalidInput("de.weight must lie in (0, 2]");
  if (!(crossover >= 0.0 && crossover <= 1.0)) throw InvalidInput("de.crossover must lie in [0, 1]");
  if (max_generations < 1) throw InvalidInput("de.max_generations must be positive");
  if (stall_limit < 1) throw InvalidInput("de.stall_limit must be positive");
  if (!(threshold >= 0.0)) throw InvalidInput("de.threshold must be non-negative");
}

bool SearchBox::contains(const std::vector<double>& x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (!(x[k] >= lo[k] && x[k] <= hi[k])) return false;
  return true;
}

std::vector<double> SearchBox::clip(std::vector<double> x) const {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
  return x;
}

SearchBox scenario_box(const TransferScenario& s) {
  SearchBox b;
  b.lo = {s.epoch_lo, s.tof_lo_s, -1, -1, -1, -1, -1, -1};
  b.hi = {s.epoch_hi, s.tof_hi_s, 1, 1, 1, 1, 1, 1};
  for (std::size_t k = 0; k < b.size(); ++k)
    if (!(b.lo[k] <= b.hi[k])) throw InvalidInput("search box bounds out of order");
  return b;
}

// ---------------------------------------------------------------------------

FitnessEvaluation evaluate_fitness(const UnknownVector& x, const TransferScenario& s,
                                   const SolverSettings& settings,
                                   const EvaluationOptions& options) {
  FitnessEvaluation ev;
  ev.j = settings.penalty;
  try {
    Costate lam = x.lambda;
    if (settings.normalize_costate) {
      const double n = lam.norm();
      if (!(n > 0.0)) {
        ev.failure = "zero initial costate";
        return ev;
      }
      lam /= n;
    }
    const bool need_param = settings.weights.w[6] > 0.0 || options.diagnostics;
    PropagationConfig cfg = settings.propagation;
    cfg.record = options.keep_trajectory;
    cfg.parameter_integral = need_param;

    const ArcModel first =
        make_arc_model(s.departure_center, s.direction, x.epoch, x.tof_s, s.u_max_kms2, s.c_kms,
                       perturbations_for(s, s.departure_center));
    Vec6 x0 = initial_boundary_map(s, x.epoch).vec();
    x0[0] /= first.scale.du_km;

    double param_integral = 0.0;
    const ArcModel* final_model = &first;
    std::optional<ArcModel> second;
    if (s.multi_arc) {
      second = make_arc_model(BodyId::EARTH, s.direction, x.epoch, x.tof_s, s.u_max_kms2, s.c_kms,
                              perturbations_for(s, BodyId::EARTH));
      if (!s.ephemeris) throw InvalidInput("two-arc scenario without ephemeris");
      TwoArcResult r = propagate_two_arc(x0, lam, first, *second, *s.ephemeris, s.rho_e_km, cfg);
      ev.x_final = r.terrestrial.x_final;
      ev.lambda_final = r.terrestrial.lambda_final;
      ev.h_final = r.terrestrial.h_final;
      param_integral = r.parameter_integral;
      ev.transition = r.transition;
      if (options.keep_trajectory) ev.trajectory = std::move(r.trajectory);
      ev.final_arc = 5;
      final_model = &*second;
    } else {
      ArcResult r = propagate_arc(x0, lam, 0.0, x.tof_s, first, cfg,
                                  s.departure_center == BodyId::EARTH ? 5 : 1);
      ev.x_final = r.x_final;
      ev.lambda_final = r.lambda_final;
      ev.h_final = r.h_final;
      param_integral = r.parameter_integral;
      if (options.keep_trajectory) ev.trajectory = std::move(r.trajectory);
      ev.final_arc = s.departure_center == BodyId::EARTH ? 5 : 1;
    }

    double y7 = 0.0;
    if (need_param) {
      const Vec6 rate = departure_state_rate(s, x.epoch, first);
      const double pairing = lam.dot(rate);
      // lambda_i . dx_G/d(epoch) plus the integral of dH/d(epoch).
      y7 = param_integral + first.sign() * pairing;
      if (options.diagnostics)
        ev.pontryagin = pontryagin_diagnostic(hamiltonian_split(x0, lam, 0.0, first),
                                              first.thrust_accel(0.0), pairing);
    }
    const CanonicalTarget target = to_canonical(s.target, final_model->scale);
    ev.y = terminal_constraint_vector(ev.x_final, ev.lambda_final, target, y7);

    if (!final_hamiltonian_check(ev.h_final, settings.xi)) {
      ev.failure = "final Hamiltonian is not negative";
      return ev;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < 7; ++k) sum += settings.weights.w[k] * ev.y[k] * ev.y[k];
    const double j = std::sqrt(sum);
    if (!std::isfinite(j)) {
      ev.failure = "non-finite fitness";
      return ev;
    }
    ev.j = std::min(j, settings.penalty);
    ev.penalized = false;
  } catch (const std::exception& e) {
    ev.failure = e.what();
    ev.j = settings.penalty;
    ev.penalized = true;
  }
  return ev;
}

// ---------------------------------------------------------------------------

std::vector<double> evaluate_population_serial(const ObjectiveFn& f,
                                               const std::vector<std::vector<double>>& pop) {
  std::vector<double> out(pop.size(), kInf);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    try {
      out[i] = finite_or_inf(f(pop[i]));
    } catch (...) {
    }
  }
  return out;
}

std::vector<double> evaluate_population_parallel(const ObjectiveFn& f,
                                                 const std::vector<std::vector<double>>& pop) {
  std::vector<double> out(pop.size());
  const long n = static_cast<long>(pop.size());
  // Each slot is written by exactly one iteration, so the result does not
  // depend on the schedule.
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    double v = kInf;
    try {
      v = finite_or_inf(f(pop[static_cast<std::size_t>(i)]));
    } catch (...) {
    }
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

DeResult run_de(const ObjectiveFn& f, const SearchBox& box, const DeConfig& cfg,
                const std::function<void(const std::vector<double>&)>& observer) {
  cfg.validate();
  const std::size_t d = box.size();
  const std::size_t np = static_cast<std::size_t>(cfg.population);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, np - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, d - 1);

  auto evaluate = [&](const std::vector<std::vector<double>>& pop) {
    if (observer)
      for (const auto& v : pop) observer(v);
    return cfg.parallel ? evaluate_population_parallel(f, pop) : evaluate_population_serial(f, pop);
  };

  std::vector<std::vector<double>> pop(np, std::vector<double>(d));
  for (auto& v : pop)
    for (std::size_t k = 0; k < d; ++k) v[k] = box.lo[k] + unit(rng) * (box.hi[k] - box.lo[k]);
  std::vector<double> fit = evaluate(pop);

  DeResult res;
  res.evaluations = static_cast<long>(np);
  auto best_index = [&] {
    return static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  };
  std::size_t ib = best_index();
  double best = fit[ib];
  int stall = 0;
  auto record = [&](int g) {
    double mean = 0.0;
    for (double v : fit) mean += std::isfinite(v) ? v : 0.0;
    res.history.push_back({g, best, mean / static_cast<double>(np)});
    if (cfg.progress) cfg.progress(res.history.back());
  };
  record(0);

  res.stop_reason = "max_generations";
  int g = 0;
  if (best < cfg.threshold) res.stop_reason = "threshold";
  while (res.stop_reason != "threshold" && g < cfg.max_generations) {
    ++g;
    std::vector<std::vector<double>> trial(np, std::vector<double>(d));
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do r1 = pick(rng); while (r1 == i);
      do r2 = pick(rng); while (r2 == i || r2 == r1);
      do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t jr = pick_dim(rng);
      for (std::size_t k = 0; k < d; ++k) {
        const bool cross = unit(rng) < cfg.crossover || k == jr;
        trial[i][k] = cross ? pop[r1][k] + cfg.weight * (pop[r2][k] - pop[r3][k]) : pop[i][k];
      }
      trial[i] = box.clip(std::move(trial[i]));
    }
    const std::vector<double> tf = evaluate(trial);
    res.evaluations += static_cast<long>(np);
    for (std::size_t i = 0; i < np; ++i) {
      if (tf[i] <= fit[i]) {
        pop[i] = trial[i];
        fit[i] = tf[i];
      }
    }
    ib = best_index();
    if (fit[ib] < best) {
      best = fit[ib];
      stall = 0;
    } else {
      ++stall;
    }
    record(g);
    if (best < cfg.threshold) {
      res.stop_reason = "threshold";
    } else if (stall >= cfg.stall_limit) {
      res.stop_reason = "stall";
      break;
    }
  }
  res.best = pop[ib];
  res.best_fitness = fit[ib];
  res.generations = g;
  return res;
}

// ---------------------------------------------------------------------------

LocalResult refine_local(const ObjectiveFn& f, const std::vector<double>& x0, const SearchBox& box,
                         const NelderMeadConfig& cfg) {
  LocalResult res;
  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < box.size(); ++k)
    if (box.hi[k] > box.lo[k]) free.push_back(k);

  const std::vector<double> start = box.clip(x0);
  res.best = start;
  res.best_fitness = finite_or_inf(f(start));
  res.evaluations = 1;
  const std::size_t n = free.size();
  if (n == 0) return res;

  using Point = std::vector<double>;
  auto to_x = [&](const Point& u) {
    std::vector<double> x = start;
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t k = free[a];
      x[k] = box.lo[k] + std::clamp(u[a], 0.0, 1.0) * (box.hi[k] - box.lo[k]);
    }
    return x;
  };
  auto eval = [&](const Point& u) {
    const std::vector<double> x = to_x(u);
    const double v = finite_or_inf(f(x));
    ++res.evaluations;
    if (v < res.best_fitness) {
      res.best_fitness = v;
      res.best = x;
    }
    return v;
  };

  for (int restart = 0; restart <= cfg.restarts; ++restart) {
    if (res.evaluations >= cfg.max_evaluations) break;
    const double f_start = res.best_fitness;
    Point u0(n);
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t k = free[a];
      u0[a] = (res.best[k] - box.lo[k]) / (box.hi[k] - box.lo[k]);
    }
    std::vector<Point> simplex{u0};
    std::vector<double> fs{res.best_fitness};
    for (std::size_t a = 0; a < n; ++a) {
      Point u = u0;
      u[a] += u[a] + cfg.initial_step <= 1.0 ? cfg.initial_step : -cfg.initial_step;
      simplex.push_back(u);
      fs.push_back(eval(u));
    }
    std::vector<std::size_t> order(n + 1);
    while (res.evaluations < cfg.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
      const std::size_t lo = order.front(), hi = order.back(), nh = order[n - 1];
      double size = 0.0;
      for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t a = 0; a < n; ++a)
          size = std::max(size, std::abs(simplex[i][a] - simplex[lo][a]));
      if (size < cfg.x_tol || std::abs(fs[hi] - fs[lo]) < cfg.f_tol) break;

      Point centroid(n, 0.0);
      for (std::size_t i = 0; i <= n; ++i)
        if (i != hi)
          for (std::size_t a = 0; a < n; ++a) centroid[a] += simplex[i][a] / static_cast<double>(n);
      auto along = [&](double t) {
        Point u(n);
        for (std::size_t a = 0; a < n; ++a)
          u[a] = std::clamp(centroid[a] + t * (simplex[hi][a] - centroid[a]), 0.0, 1.0);
        return u;
      };
      const Point ur = along(-1.0);
      const double fr = eval(ur);
      if (fr < fs[lo]) {
        const Point ue = along(-2.0);
        const double fe = eval(ue);
        if (fe < fr) {
          simplex[hi] = ue;
          fs[hi] = fe;
        } else {
          simplex[hi] = ur;
          fs[hi] = fr;
        }
      } else if (fr < fs[nh]) {
        simplex[hi] = ur;
        fs[hi] = fr;
      } else {
        const bool outside = fr < fs[hi];
        const Point uc = along(outside ? -0.5 : 0.5);
        const double fc = eval(uc);
        if (fc < (outside ? fr : fs[hi])) {
          simplex[hi] = uc;
          fs[hi] = fc;
        } else {
          for (std::size_t i = 0; i <= n; ++i) {
            if (i == lo) continue;
            for (std::size_t a = 0; a < n; ++a)
              simplex[i][a] = simplex[lo][a] + 0.5 * (simplex[i][a] - simplex[lo][a]);
            fs[i] = eval(simplex[i]);
          }
        }
      }
    }
    if (!(res.best_fitness < f_start)) break;
  }
  return res;
}

// ---------------------------------------------------------------------------

SolutionRecord record_for(const TransferScenario& s, const SolverSettings& settings,
                          const UnknownVector& x) {
  SolutionRecord rec;
  rec.scenario_id = s.id;
  rec.direction = s.direction;
  rec.x = x;
  if (settings.normalize_costate && x.lambda.norm() > 0.0) rec.x.lambda = x.lambda.normalized();
  EvaluationOptions opt;
  opt.keep_trajectory = true;
  opt.diagnostics = true;
  rec.evaluation = evaluate_fitness(rec.x, s, settings, opt);
  rec.j = rec.evaluation.j;
  rec.y = rec.evaluation.y;
  rec.tof_s = x.tof_s;
  rec.mr_final = 1.0 - (s.u_max_kms2 / s.c_kms) * x.tof_s;
  if (s.direction == Direction::FORWARD) {
    rec.t0 = x.epoch;
    rec.tf = x.epoch + x.tof_s;
  } else {
    rec.t0 = x.epoch - x.tof_s;
    rec.tf = x.epoch;
  }
  rec.hamiltonian_ok = final_hamiltonian_check(rec.evaluation.h_final, settings.xi);
  const bool ok = !rec.evaluation.penalized && rec.j < settings.converged_below && rec.hamiltonian_ok;
  rec.status = ok ? "converged" : "not_converged";
  return rec;
}

SolutionRecord solve_scenario(const TransferScenario& s, const SolverSettings& settings,
                              const DeConfig& de) {
  const SearchBox box = scenario_box(s);
  const ObjectiveFn f = [&](const std::vector<double>& v) {
    return evaluate_fitness(UnknownVector::from_vector(v), s, settings).j;
  };
  const DeResult dr = run_de(f, box, de);
  std::vector<double> best = dr.best;
  long evaluations = dr.evaluations;
  if (settings.refine && dr.best_fitness < settings.penalty) {
    const LocalResult lr = refine_local(f, best, box, settings.local);
    evaluations += lr.evaluations;
    if (lr.best_fitness <= dr.best_fitness) best = lr.best;
  }
  SolutionRecord rec = record_for(s, settings, UnknownVector::from_vector(best));
  rec.generations = dr.generations;
  rec.evaluations = evaluations;
  return rec;
}

std::string solution_json(const SolutionRecord& rec) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["scenario_id"] = rec.scenario_id;
  j["direction"] = std::string(to_string(rec.direction));
  j["t0_utc"] = tdb_to_utc_string(rec.t0);
  j["tf_utc"] = tdb_to_utc_string(rec.tf);
  j["tof_s"] = rec.tof_s;
  j["mr_final"] = rec.mr_final;
  j["J_tilde"] = rec.j;
  j["Y"] = std::vector<double>(rec.y.begin(), rec.y.end());
  j["X"] = rec.x.to_vector();
  j["status"] = rec.status;

  const FitnessEvaluation& ev = rec.evaluation;
  ordered_json diag;
  diag["h_final"] = ev.h_final;
  diag["final_hamiltonian_negative"] = rec.hamiltonian_ok;
  diag["failure"] = ev.failure;
  diag["generations"] = rec.generations;
  diag["evaluations"] = rec.evaluations;
  if (ev.pontryagin) {
    const PontryaginReport& p = *ev.pontryagin;
    diag["pontryagin"] = {{"h0", p.h0},
                          {"h_x", p.h_x},
                          {"switching_norm", p.switching_norm},
                          {"thrust_accel", p.thrust_accel},
                          {"gateway_pairing", p.gateway_pairing},
                          {"margin", p.margin},
                          {"identity_residual", p.identity_residual},
                          {"degenerate", p.degenerate},
                          {"satisfied", p.satisfied}};
  }
  if (ev.transition) {
    const TransitionRecord& t = *ev.transition;
    diag["transition"] = {{"tau_s", t.tau_s},
                          {"epoch_utc", tdb_to_utc_string(t.epoch)},
                          {"event_residual_km", t.event_residual_km},
                          {"h_before_per_s", t.h_before_per_s},
                          {"h_after_per_s", t.h_after_per_s},
                          {"continuity_rel", t.continuity_rel},
                          {"continuity_state_only_rel", t.continuity_state_only_rel}};
  }
  j["diagnostics"] = diag;
  return j.dump(2) + "\n";
}

}  // namespace cislunar
