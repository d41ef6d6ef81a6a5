#include "pmsmopt/problems.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

#include "pmsmopt/errors.hpp"
#include "pmsmopt/sampling.hpp"

namespace pmsmopt {

Problem make_pmsm_problem(const DesignSpec& spec, MeasureSource source, EvaluatorTag tag,
                          std::size_t max_resample_rounds, const DriveLimits& limits) {
  Problem p;
  p.variables = spec.variables();
  p.num_objectives = 2;
  p.num_constraints = kNumConstraints;
  p.tag = tag;
  p.evaluate = [spec, source = std::move(source), limits](std::span<const double> x) {
    using Clock = std::chrono::steady_clock;
    const auto v = clamp_to_bounds(x, spec);
    const auto report = geometry_check(v, spec.limits);

    EvaluationResult r;
    r.constraints.assign(kNumConstraints, 0.0);
    for (std::size_t k = 0; k < kNumGeometryChecks; ++k) r.constraints[k + 1] = report.values[k];
    if (!report.feasible) {
      r.physics_evaluated = false;
      r.objectives.assign(2, std::numeric_limits<double>::quiet_NaN());
      r.constraints[0] = drive_constants::kRequiredTorque;
      return r;
    }

    const auto t0 = Clock::now();
    auto measures = std::make_shared<const IntermediateMeasures>(source(v));
    const auto t1 = Clock::now();
    const auto kpi = evaluate_kpis(v, *measures, spec.limits, limits);
    const auto t2 = Clock::now();

    r.measure_seconds = std::chrono::duration<double>(t1 - t0).count();
    r.postprocess_seconds = std::chrono::duration<double>(t2 - t1).count();
    r.objectives = {kpi.kpis.neg_max_power, kpi.kpis.cost};
    r.constraints.assign(kpi.constraints.values.begin(), kpi.constraints.values.end());
    r.measures = std::move(measures);
    return r;
  };
  p.initial_population = [spec, max_resample_rounds](std::size_t n, std::uint64_t seed) {
    std::vector<std::vector<double>> xs;
    for (const auto& v : lhs_feasible({n, seed, max_resample_rounds}, spec)) {
      xs.emplace_back(v.values.begin(), v.values.end());
    }
    return xs;
  };
  return p;
}

namespace {

constexpr std::size_t kZdtVariables = 30;
constexpr std::size_t kTrueFrontSamples = 10001;

double zdt_g(std::span<const double> x) {
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) sum += x[i];
  return 1.0 + 9.0 * sum / static_cast<double>(x.size() - 1);
}

Benchmark zdt(std::string id, bool convex) {
  Benchmark b;
  b.id = std::move(id);
  b.problem.variables.assign(kZdtVariables, Variable{0.0, 1.0, false});
  b.problem.num_objectives = 2;
  b.problem.num_constraints = 0;
  b.problem.evaluate = [convex](std::span<const double> x) {
    const double f1 = x[0];
    const double g = zdt_g(x);
    const double h = convex ? 1.0 - std::sqrt(f1 / g) : 1.0 - (f1 / g) * (f1 / g);
    EvaluationResult r;
    r.objectives = {f1, g * h};
    return r;
  };
  b.reference_point = {1.0, 1.0};
  // Area under the front is 1/3 for ZDT2 and 2/3 for ZDT1 against (1, 1).
  b.analytic_hypervolume = convex ? 2.0 / 3.0 : 1.0 / 3.0;
  for (std::size_t k = 0; k < kTrueFrontSamples; ++k) {
    const double f1 = static_cast<double>(k) / (kTrueFrontSamples - 1);
    b.true_front.push_back({f1, convex ? 1.0 - std::sqrt(f1) : 1.0 - f1 * f1});
  }
  return b;
}

Benchmark constrained_demo() {
  Benchmark b;
  b.id = "constrained-demo";
  b.problem.variables.assign(2, Variable{0.0, 1.0, false});
  b.problem.num_objectives = 2;
  b.problem.num_constraints = 1;
  b.problem.evaluate = [](std::span<const double> x) {
    EvaluationResult r;
    r.objectives = {x[0], 1.0 - x[0] + x[1]};
    r.constraints = {0.3 - std::abs(x[0] - 0.5)};
    return r;
  };
  b.reference_point = {1.0, 1.0};
  // Feasible front: f2 = 1 - f1 for f1 in [0, 0.2] u [0.8, 1].
  b.analytic_hypervolume = 0.32;
  for (std::size_t k = 0; k < kTrueFrontSamples; ++k) {
    const double f1 = static_cast<double>(k) / (kTrueFrontSamples - 1);
    if (f1 <= 0.2 || f1 >= 0.8) b.true_front.push_back({f1, 1.0 - f1});
  }
  return b;
}

}  // namespace

Benchmark make_benchmark(std::string_view suite) {
  if (suite == "zdt1") return zdt("zdt1", true);
  if (suite == "zdt2") return zdt("zdt2", false);
  if (suite == "constrained-demo") return constrained_demo();
  throw ConfigError("unknown benchmark suite '" + std::string(suite) + "' (expected zdt1, zdt2, constrained-demo)");
}

}  // namespace pmsmopt
