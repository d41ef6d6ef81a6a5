#pragma once

// Concrete optimization problems: the PMSM design problem (classical or
// hybrid measure source) and analytic benchmarks with known fronts.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pmsmopt/design_space.hpp"
#include "pmsmopt/machine_model.hpp"
#include "pmsmopt/optimizer.hpp"
#include "pmsmopt/postprocess.hpp"

namespace pmsmopt {

using MeasureSource = std::function<IntermediateMeasures(const DesignVector&)>;

/// Objectives (k1 = -P_max, k2 = cost) and constraints (c1..c6). Designs that
/// fail the geometry check skip the measure source and post-processing: their
/// objectives are NaN and c1 is T_req, i.e. an unbuildable machine is scored
/// as producing no torque.
Problem make_pmsm_problem(const DesignSpec& spec, MeasureSource source, EvaluatorTag tag,
                          std::size_t max_resample_rounds = 100, const DriveLimits& limits = {});

struct Benchmark {
  std::string id;
  Problem problem;
  std::vector<double> reference_point;
  double analytic_hypervolume = 0.0;
  /// Dense sampling of the true (constrained) Pareto front.
  std::vector<std::vector<double>> true_front;
};

/// "zdt1", "zdt2" (30 variables) or "constrained-demo" (2 variables, one
/// constraint removing the middle of the unconstrained front).
Benchmark make_benchmark(std::string_view suite);

}  // namespace pmsmopt
