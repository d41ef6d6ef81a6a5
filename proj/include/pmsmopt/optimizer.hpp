#pragma once

// NSGA-II style multi-objective engine: constraint-dominated non-dominated
// sorting, crowding distance, binary tournaments, SBX crossover, polynomial
// mutation, an append-only deduplicating design archive, and 2-D front
// indicators (hypervolume, coverage).

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pmsmopt/machine_model.hpp"
#include "pmsmopt/random.hpp"
#include "pmsmopt/variables.hpp"

namespace pmsmopt {

enum class EvaluatorTag { reference, surrogate, analytic };

std::string_view to_string(EvaluatorTag tag);
EvaluatorTag evaluator_tag_from_string(std::string_view s);

struct EvaluatedDesign {
  std::uint64_t id = 0;
  std::vector<double> x;
  std::vector<double> objectives;   // NaN sentinels when physics was skipped
  std::vector<double> constraints;  // <= 0 satisfied
  bool feasible = false;
  double violation = 0.0;  // sum of max(0, c_k)
  std::size_t generation = 0;
  EvaluatorTag evaluator = EvaluatorTag::analytic;
  bool physics_evaluated = true;
  std::shared_ptr<const IntermediateMeasures> measures;
};

/// Total violation and feasibility from constraint values.
void finalize_feasibility(EvaluatedDesign& d);

/// Constraint domination: feasible beats infeasible, lower violation wins
/// among infeasible, Pareto dominance (minimization) among feasible.
bool dominates(const EvaluatedDesign& a, const EvaluatedDesign& b);

/// Weak Pareto dominance on raw objective vectors (minimization).
bool weakly_dominates(std::span<const double> a, std::span<const double> b);
bool pareto_dominates(std::span<const double> a, std::span<const double> b);

/// Fronts of indices into pop; each front is in ascending index order.
std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const EvaluatedDesign> pop);

/// Crowding distance of each member of `front` (same order as `front`).
std::vector<double> crowding_distance(std::span<const EvaluatedDesign> pop, std::span<const std::size_t> front);

struct RankInfo {
  std::vector<std::size_t> rank;   // 0 = first front
  std::vector<double> crowding;
};

RankInfo rank_population(std::span<const EvaluatedDesign> pop);

/// Binary tournament: lower rank, then larger crowding, then a fair coin.
std::size_t tournament_select(const RankInfo& info, Rng& rng);
std::size_t tournament_winner(const RankInfo& info, std::size_t a, std::size_t b, Rng& rng);

struct OptimizerConfig {
  std::size_t population_size = 64;
  std::size_t max_generations = 100;
  double crossover_probability = 0.9;
  double eta_c = 15.0;
  double mutation_probability = 1.0 / 14.0;
  double eta_m = 20.0;
  double integer_reset_probability = 0.1;
  std::size_t convergence_window = 10;
  /// Relative hypervolume gain over the window below which the run stops.
  /// A value <= 0 disables the stagnation test.
  double convergence_threshold = 1e-3;
  std::uint64_t seed = 0;
  /// Evaluation budget multiplier ("factor2" = 2).
  std::size_t budget_multiplier = 1;
  /// Fixed hypervolume reference point; derived from generation 0 if unset.
  std::optional<std::vector<double>> reference_point;
  std::size_t threads = 1;

  void validate() const;
  /// Generations run for the configured budget: m * (G + 1) - 1, so that the
  /// evaluation count (population * (generations + 1)) scales by exactly m.
  std::size_t effective_max_generations() const;
};

std::pair<std::vector<double>, std::vector<double>> sbx_crossover(std::span<const double> p1,
                                                                  std::span<const double> p2,
                                                                  std::span<const Variable> vars,
                                                                  const OptimizerConfig& cfg, Rng& rng);

std::vector<double> polynomial_mutation(std::span<const double> x, std::span<const Variable> vars,
                                        const OptimizerConfig& cfg, Rng& rng);

/// Exact 2-D hypervolume (minimization). Points not strictly dominating the
/// reference point are ignored.
double hypervolume_2d(std::span<const std::vector<double>> front, std::span<const double> reference);

/// Fraction of B weakly dominated by some member of A. Empty B gives 0.
double coverage(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b);

/// Mean Euclidean distance from each point of `front` to its nearest point
/// of `reference_front`.
double generational_distance(std::span<const std::vector<double>> front,
                             std::span<const std::vector<double>> reference_front);

/// Reference point from observed objective vectors: componentwise worst plus
/// 10% of its magnitude (worst * 1.1 for positive values).
std::vector<double> margin_reference_point(std::span<const std::vector<double>> objectives);

/// Append-only design store with dedupe by 6-significant-digit rounding of
/// the design vector, and an incrementally maintained feasible Pareto front.
class ParetoArchive {
 public:
  /// Returns false (and stores nothing) for a duplicate design.
  bool add(const EvaluatedDesign& d);

  const std::vector<EvaluatedDesign>& designs() const { return designs_; }
  std::size_t size() const { return designs_.size(); }

  /// Feasible, mutually non-dominated members in archive order. Members with
  /// identical objective vectors are all kept.
  std::vector<EvaluatedDesign> pareto_front() const;
  std::vector<std::vector<double>> front_objectives() const;

  static std::string dedupe_key(std::span<const double> x);

 private:
  std::vector<EvaluatedDesign> designs_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> front_;
};

struct EvaluationResult {
  std::vector<double> objectives;
  std::vector<double> constraints;
  bool physics_evaluated = true;
  std::shared_ptr<const IntermediateMeasures> measures;
  double measure_seconds = 0.0;
  double postprocess_seconds = 0.0;
};

/// Must be pure and safe to call concurrently.
using Evaluator = std::function<EvaluationResult(std::span<const double>)>;
using PopulationInitializer = std::function<std::vector<std::vector<double>>(std::size_t n, std::uint64_t seed)>;

struct Problem {
  std::vector<Variable> variables;
  std::size_t num_objectives = 2;
  std::size_t num_constraints = 0;
  Evaluator evaluate;
  EvaluatorTag tag = EvaluatorTag::analytic;
  /// Defaults to a plain Latin hypercube over the variable bounds.
  PopulationInitializer initial_population;
};

struct GenerationStats {
  std::size_t generation = 0;
  double hypervolume = 0.0;
  std::size_t feasible_count = 0;  // in the current population
  std::size_t front_size = 0;      // archive Pareto front
  std::size_t evaluations = 0;     // cumulative
  std::size_t archive_size = 0;
};

struct EvaluationTiming {
  std::size_t evaluations = 0;
  std::size_t physics_evaluations = 0;
  double measure_seconds = 0.0;
  double postprocess_seconds = 0.0;
  double evaluation_wall_seconds = 0.0;
};

struct OptResult {
  std::vector<EvaluatedDesign> population;
  std::vector<EvaluatedDesign> front;
  ParetoArchive archive;
  std::vector<GenerationStats> history;
  std::vector<double> reference_point;
  std::size_t evaluations = 0;
  std::size_t generations_executed = 0;
  bool converged = false;
  EvaluationTiming timing;
  /// Set when the evaluator threw; the archive holds everything evaluated before.
  std::optional<std::string> failure;
};

using GenerationCallback = std::function<void(const GenerationStats&)>;

/// Runs the evolutionary loop. Evaluator exceptions end the run with
/// `failure` set and the partial archive intact.
OptResult run(const OptimizerConfig& cfg, const Problem& problem, const GenerationCallback& on_generation = {});

}  // namespace pmsmopt
