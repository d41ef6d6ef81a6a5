#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmsmopt/design_space.hpp"
#include "pmsmopt/variables.hpp"

namespace pmsmopt {

struct SamplingConfig {
  std::size_t n_lhs = 100;
  std::uint64_t seed = 0;
  std::size_t max_resample_rounds = 100;
};

/// Latin hypercube over arbitrary box bounds. Each continuous dimension
/// places one uniform point in each of n equal-width strata, strata paired
/// across dimensions by independent permutations. Integer dimensions round the
/// stratified value half-away-from-zero and clip.
std::vector<std::vector<double>> lhs_points(std::size_t n, std::span<const Variable> vars,
                                            std::uint64_t seed);

std::vector<DesignVector> lhs_sample(const SamplingConfig& cfg, const DesignSpec& spec);

/// Draws LHS batches (round r uses a seed derived from cfg.seed and r; round 0
/// uses cfg.seed itself) and keeps geometry-feasible designs in draw order
/// until n_lhs are collected. Throws FeasibilityExhausted after
/// max_resample_rounds rounds.
std::vector<DesignVector> lhs_feasible(const SamplingConfig& cfg, const DesignSpec& spec);

}  // namespace pmsmopt
