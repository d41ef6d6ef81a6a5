#pragma once

#include <cmath>
#include <span>

namespace pmsmopt {

/// One box-bounded decision variable, as seen by the sampler and optimizer.
struct Variable {
  double lower = 0.0;
  double upper = 1.0;
  bool integer = false;
};

/// Half-away-from-zero rounding (std::round semantics).
inline double round_half_away(double x) { return std::round(x); }

/// Rounds integer variables, then clips into [lower, upper].
inline double clamp_variable(double x, const Variable& var) {
  if (var.integer) x = round_half_away(x);
  if (x < var.lower) return var.lower;
  if (x > var.upper) return var.upper;
  return x;
}

inline bool within_bounds(std::span<const double> x, std::span<const Variable> vars) {
  if (x.size() != vars.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= vars[i].lower && x[i] <= vars[i].upper)) return false;
    if (vars[i].integer && x[i] != std::round(x[i])) return false;
  }
  return true;
}

}  // namespace pmsmopt
