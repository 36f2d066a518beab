#pragma once

#include "cislunar/indirect_core.hpp"
#include "cislunar/multiarc.hpp"
#include "cislunar/propagation.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cislunar {

// (epoch parameter [s past J2000], tau_fin [s], initial costate).
struct UnknownVector {
  double epoch = 0.0;
  double tof_s = 0.0;
  Costate lambda = Costate::Zero();

  std::vector<double> to_vector() const;
  static UnknownVector from_vector(const std::vector<double>& v);
};

struct FitnessWeights {
  std::array<double, 7> w{1.0, 100.0, 1.0, 1.0, 1.0, 1.0, 0.0};
};

struct DeGeneration {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
};

struct DeConfig {
  int population = 40;
  double weight = 0.7;     // differential weight F
  double crossover = 0.9;  // CR
  int max_generations = 2000;
  int stall_limit = 50;
  double threshold = 1e-6;
  std::uint64_t seed = 1;
  bool parallel = true;
  std::function<void(const DeGeneration&)> progress;  // optional, once per generation

  void validate() const;
};

struct NelderMeadConfig {
  int max_evaluations = 4000;
  double initial_step = 1e-3;  // fraction of each box edge
  double x_tol = 1e-12;        // simplex size, box fractions
  double f_tol = 1e-14;
  int restarts = 3;
};

struct SolverSettings {
  FitnessWeights weights;
  double penalty = 1e6;
  double xi = 0.0;
  double converged_below = 1e-5;
  bool normalize_costate = true;
  bool refine = true;
  PropagationConfig propagation;
  NelderMeadConfig local;
};

struct FitnessEvaluation {
  double j = 0.0;
  ConstraintVector y{};
  bool penalized = true;
  std::string failure;
  double h_final = 0.0;  // optimal Hamiltonian at tau_fin, per final-arc TU
  Vec6 x_final = Vec6::Zero();
  Costate lambda_final = Costate::Zero();
  int final_arc = 1;
  std::optional<Trajectory> trajectory;
  std::optional<TransitionRecord> transition;
  std::optional<PontryaginReport> pontryagin;
};

struct EvaluationOptions {
  bool keep_trajectory = false;
  bool diagnostics = false;  // parameter condition and Pontryagin report
};

// Box of the unknown vector; equal bounds freeze a coordinate.
struct SearchBox {
  std::vector<double> lo, hi;
  std::size_t size() const { return lo.size(); }
  bool contains(const std::vector<double>& x) const;
  std::vector<double> clip(std::vector<double> x) const;
};

SearchBox scenario_box(const TransferScenario& scenario);

// Never throws: every failure maps to the penalty value.
FitnessEvaluation evaluate_fitness(const UnknownVector& x, const TransferScenario& scenario,
                                   const SolverSettings& settings,
                                   const EvaluationOptions& options = {});

using ObjectiveFn = std::function<double(const std::vector<double>&)>;

// Fitness of every member; serial reference and OpenMP variant give
// identical results.
std::vector<double> evaluate_population_serial(const ObjectiveFn& f,
                                               const std::vector<std::vector<double>>& pop);
std::vector<double> evaluate_population_parallel(const ObjectiveFn& f,
                                                 const std::vector<std::vector<double>>& pop);

struct DeResult {
  std::vector<double> best;
  double best_fitness = 0.0;
  int generations = 0;
  long evaluations = 0;
  std::string stop_reason;  // threshold | stall | max_generations
  std::vector<DeGeneration> history;
};

// DE/rand/1/bin over a box; mutants are clipped to the box. Optional
// observer sees every evaluated trial vector.
DeResult run_de(const ObjectiveFn& f, const SearchBox& box, const DeConfig& cfg,
                const std::function<void(const std::vector<double>&)>& observer = nullptr);

struct LocalResult {
  std::vector<double> best;
  double best_fitness = 0.0;
  long evaluations = 0;
};

// Nelder-Mead in box-normalized coordinates; never returns a point worse
// than x0.
LocalResult refine_local(const ObjectiveFn& f, const std::vector<double>& x0, const SearchBox& box,
                         const NelderMeadConfig& cfg);

struct SolutionRecord {
  std::string scenario_id;
  Direction direction = Direction::FORWARD;
  UnknownVector x;
  double j = 0.0;
  ConstraintVector y{};
  double tof_s = 0.0;
  double mr_final = 1.0;
  double t0 = 0.0;
  double tf = 0.0;
  std::string status;  // converged | not_converged
  bool hamiltonian_ok = false;
  int generations = 0;
  long evaluations = 0;
  FitnessEvaluation evaluation;  // with trajectory and diagnostics
};

SolutionRecord solve_scenario(const TransferScenario& scenario, const SolverSettings& settings,
                              const DeConfig& de);

// Builds the record for a given unknown vector without searching.
SolutionRecord record_for(const TransferScenario& scenario, const SolverSettings& settings,
                          const UnknownVector& x);

std::string solution_json(const SolutionRecord& rec);

}  // namespace cislunar
