#include "cislunar/epoch.hpp"
#include "cislunar/error.hpp"
#include "cislunar/solver.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>

using namespace cislunar;

namespace {

double sphere(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += (x - 0.25) * (x - 0.25);
  return s;
}

SearchBox unit_box(std::size_t d) {
  return {std::vector<double>(d, -1.0), std::vector<double>(d, 1.0)};
}

// Circular lunar raise, two-body, short horizon: cheap to evaluate.
TransferScenario raise_scenario() {
  TransferScenario s;
  s.id = "raise";
  s.direction = Direction::FORWARD;
  s.departure = DepartureKind::FIXED_ORBIT;
  s.departure_center = BodyId::MOON;
  ClassicalElements c;
  c.a = 1.2 * bodies::moon.radius_km;
  s.fixed_departure = coe_to_mee(c);
  s.target = {2.0 * bodies::moon.radius_km, 0.0, 0.0, BodyId::MOON};
  s.perturbations = false;
  s.epoch_lo = s.epoch_hi = utc_to_tdb("2025-05-25T00:00:00Z");
  s.tof_lo_s = 7.3 * 86400.0;
  s.tof_hi_s = 8.9 * 86400.0;
  return s;
}

}  // namespace

TEST_CASE("unknown vector layout") {
  UnknownVector x;
  x.epoch = 1.0;
  x.tof_s = 2.0;
  x.lambda << 3, 4, 5, 6, 7, 8;
  const std::vector<double> v = x.to_vector();
  CHECK(v == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  const UnknownVector y = UnknownVector::from_vector(v);
  CHECK(y.lambda == x.lambda);
  CHECK_THROWS_AS(UnknownVector::from_vector({1, 2}), InvalidInput);
}

TEST_CASE("DE configuration is validated") {
  DeConfig c;
  CHECK_NOTHROW(c.validate());
  c.population = 3;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = DeConfig{};
  c.crossover = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = DeConfig{};
  c.weight = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("serial and parallel population evaluation agree") {
  std::vector<std::vector<double>> pop;
  for (int k = 0; k < 37; ++k) pop.push_back({0.1 * k, -0.05 * k, 1.0});
  CHECK(evaluate_population_serial(sphere, pop) == evaluate_population_parallel(sphere, pop));

  // Throwing and non-finite members both rank last, in either variant.
  auto odd = [](const std::vector<double>& v) {
    if (v[0] > 3.0) throw std::runtime_error("boom");
    return v[0] > 2.0 ? NAN : v[0];
  };
  const auto a = evaluate_population_serial(odd, pop);
  CHECK(a == evaluate_population_parallel(odd, pop));
  CHECK(std::isinf(a.back()));
  CHECK(std::isinf(a[25]));
}

TEST_CASE("DE minimizes a sphere inside the box") {
  DeConfig cfg;
  cfg.population = 20;
  cfg.max_generations = 1000;
  cfg.seed = 42;
  const SearchBox box = unit_box(4);
  bool inside = true;
  const DeResult r = run_de(sphere, box, cfg, [&](const std::vector<double>& v) {
    inside = inside && box.contains(v);
  });
  CHECK(inside);
  CHECK(r.stop_reason == "threshold");
  CHECK(r.best_fitness < 1e-6);
  for (double x : r.best) CHECK(std::abs(x - 0.25) < 1e-2);
  CHECK(r.evaluations == static_cast<long>(cfg.population) * (r.generations + 1));
  // Elitist selection: the best never worsens.
  for (std::size_t k = 1; k < r.history.size(); ++k)
    CHECK(r.history[k].best <= r.history[k - 1].best);
}

TEST_CASE("DE is deterministic for a seed and independent of parallelism") {
  DeConfig cfg;
  cfg.population = 12;
  cfg.max_generations = 40;
  cfg.seed = 7;
  const SearchBox box = unit_box(3);
  const DeResult a = run_de(sphere, box, cfg);
  cfg.parallel = false;
  const DeResult b = run_de(sphere, box, cfg);
  CHECK(a.best == b.best);
  CHECK(a.best_fitness == b.best_fitness);
  cfg.seed = 8;
  const DeResult c = run_de(sphere, box, cfg);
  CHECK(c.best != a.best);
}

TEST_CASE("DE freezes equal bounds and stops on stall") {
  DeConfig cfg;
  cfg.population = 8;
  cfg.stall_limit = 5;
  SearchBox box = unit_box(3);
  box.lo[1] = box.hi[1] = 0.5;
  bool frozen = true;
  const DeResult r = run_de([](const std::vector<double>&) { return 1.0; }, box, cfg,
                            [&](const std::vector<double>& v) { frozen = frozen && v[1] == 0.5; });
  CHECK(frozen);
  CHECK(r.stop_reason == "stall");
  CHECK(r.generations == 5);
}

TEST_CASE("Nelder-Mead refines a quadratic") {
  const SearchBox box = unit_box(3);
  auto quad = [](const std::vector<double>& v) {
    return (v[0] - 0.3) * (v[0] - 0.3) + 10.0 * (v[1] + 0.2) * (v[1] + 0.2) +
           0.1 * (v[2] - 0.7) * (v[2] - 0.7);
  };
  NelderMeadConfig cfg;
  cfg.initial_step = 0.1;
  cfg.f_tol = 1e-20;  // let the simplex size decide
  const LocalResult r = refine_local(quad, {0.0, 0.0, 0.0}, box, cfg);
  CHECK(std::abs(r.best[0] - 0.3) < 1e-8);
  CHECK(std::abs(r.best[1] + 0.2) < 1e-8);
  CHECK(std::abs(r.best[2] - 0.7) < 1e-8);
  CHECK(box.contains(r.best));

  // Starting at the optimum never makes things worse.
  const LocalResult again = refine_local(quad, r.best, box, cfg);
  CHECK(again.best_fitness <= r.best_fitness);
}

TEST_CASE("fitness evaluation maps failures to the penalty") {
  const TransferScenario s = raise_scenario();
  SolverSettings settings;
  UnknownVector x;
  x.epoch = s.epoch_lo;
  x.tof_s = 8 * 86400.0;

  const FitnessEvaluation zero = evaluate_fitness(x, s, settings);
  CHECK(zero.penalized);
  CHECK(zero.j == settings.penalty);
  CHECK_FALSE(zero.failure.empty());

  x.tof_s = 1e9;  // more than the propellant allows
  const FitnessEvaluation dry = evaluate_fitness(x, s, settings);
  CHECK(dry.penalized);
  CHECK(dry.j == settings.penalty);

  x.tof_s = 8 * 86400.0;
  x.lambda << -0.6, 0.0, 0.0, 0.0, 0.0, 0.1;
  const FitnessEvaluation ev = evaluate_fitness(x, s, settings, {true, true});
  REQUIRE(ev.trajectory);
  CHECK(ev.pontryagin);
  if (!ev.penalized) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 7; ++k) sum += settings.weights.w[k] * ev.y[k] * ev.y[k];
    CHECK(ev.j == doctest::Approx(std::sqrt(sum)));
  } else {
    CHECK(ev.failure == "final Hamiltonian is not negative");
  }
  // Costate scale does not matter once normalized.
  UnknownVector scaled = x;
  scaled.lambda *= 7.0;
  CHECK(evaluate_fitness(scaled, s, settings).j == doctest::Approx(ev.j).epsilon(1e-12));
}

TEST_CASE("solution record and JSON") {
  TransferScenario s = raise_scenario();
  SolverSettings settings;
  UnknownVector x;
  x.epoch = s.epoch_lo;
  x.tof_s = 8 * 86400.0;
  x.lambda << -3.0, 0.0, 0.0, 0.0, 0.0, 0.4;
  const SolutionRecord fwd = record_for(s, settings, x);
  CHECK(fwd.x.lambda.norm() == doctest::Approx(1.0));
  CHECK(fwd.t0 == x.epoch);
  CHECK(fwd.tf == x.epoch + x.tof_s);
  CHECK(fwd.mr_final == doctest::Approx(1.0 - 4.903e-7 / 30.0 * x.tof_s));
  CHECK(fwd.status == "not_converged");

  s.direction = Direction::BACKWARD;
  const SolutionRecord back = record_for(s, settings, x);
  CHECK(back.tf == x.epoch);
  CHECK(back.t0 == x.epoch - x.tof_s);

  const auto j = nlohmann::json::parse(solution_json(fwd));
  for (const char* key : {"scenario_id", "direction", "t0_utc", "tf_utc", "tof_s", "mr_final",
                          "J_tilde", "Y", "X", "status", "diagnostics"})
    CHECK(j.contains(key));
  CHECK(j["Y"].size() == 7);
  CHECK(j["X"].size() == 8);
  CHECK(j["direction"] == "forward");
  CHECK(j["t0_utc"] == "2025-05-25T00:00:00Z");
}
