#include "pmsmopt/sampling.hpp"

#include <numeric>
#include <string>

#include "pmsmopt/errors.hpp"
#include "pmsmopt/random.hpp"

namespace pmsmopt {

std::vector<std::vector<double>> lhs_points(std::size_t n, std::span<const Variable> vars,
                                            std::uint64_t seed) {
  std::vector<std::vector<double>> points(n, std::vector<double>(vars.size()));
  if (n == 0) return points;
  Rng rng(seed);
  std::vector<std::size_t> strata(n);
  for (std::size_t d = 0; d < vars.size(); ++d) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(strata));
    const double width = vars[d].upper - vars[d].lower;
    for (std::size_t k = 0; k < n; ++k) {
      const double u = (static_cast<double>(strata[k]) + rng.uniform()) / static_cast<double>(n);
      points[k][d] = clamp_variable(vars[d].lower + u * width, vars[d]);
    }
  }
  return points;
}

std::vector<DesignVector> lhs_sample(const SamplingConfig& cfg, const DesignSpec& spec) {
  const auto vars = spec.variables();
  const auto points = lhs_points(cfg.n_lhs, vars, cfg.seed);
  std::vector<DesignVector> designs;
  designs.reserve(points.size());
  for (const auto& x : points) designs.push_back(DesignVector::from_span(x));
  return designs;
}

std::vector<DesignVector> lhs_feasible(const SamplingConfig& cfg, const DesignSpec& spec) {
  std::vector<DesignVector> accepted;
  accepted.reserve(cfg.n_lhs);
  for (std::size_t round = 0; round < cfg.max_resample_rounds && accepted.size() < cfg.n_lhs; ++round) {
    SamplingConfig batch = cfg;
    if (round > 0) batch.seed = derive_seed(cfg.seed, stream::kLhsRound, round);
    for (const auto& v : lhs_sample(batch, spec)) {
      if (accepted.size() == cfg.n_lhs) break;
      if (geometry_check(v, spec.limits).feasible) accepted.push_back(v);
    }
  }
  if (accepted.size() < cfg.n_lhs) {
    throw FeasibilityExhausted("only " + std::to_string(accepted.size()) + " of " + std::to_string(cfg.n_lhs) +
                               " geometry-feasible designs found in " + std::to_string(cfg.max_resample_rounds) +
                               " LHS rounds");
  }
  return accepted;
}

}  // namespace pmsmopt
