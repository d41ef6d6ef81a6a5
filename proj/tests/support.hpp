#pragma once

#include <cmath>
#include <vector>

#include "pmsmopt/design_space.hpp"
#include "pmsmopt/random.hpp"
#include "pmsmopt/sampling.hpp"

namespace testing {

// A mid-range design that passes every geometry check.
inline pmsmopt::DesignVector generous_design() {
  return pmsmopt::DesignVector{{3, 80, 0.8, 20, 12, 6, 10, 3, 20, 10, 3, 20, 100, 8}};
}

inline pmsmopt::DesignVector random_in_bounds(const pmsmopt::DesignSpec& spec, pmsmopt::Rng& rng) {
  pmsmopt::DesignVector v;
  for (std::size_t i = 0; i < pmsmopt::kNumParams; ++i) {
    const auto& p = spec.params[i];
    double x = rng.uniform(p.lower, p.upper);
    if (p.kind == pmsmopt::ParamKind::integer) {
      x = p.lower + static_cast<double>(rng.below(static_cast<std::uint64_t>(p.upper - p.lower) + 1));
    }
    v.values[i] = x;
  }
  return v;
}

inline std::vector<pmsmopt::DesignVector> feasible_designs(std::size_t n, std::uint64_t seed) {
  return pmsmopt::lhs_feasible({n, seed, 100}, pmsmopt::DesignSpec::defaults());
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
