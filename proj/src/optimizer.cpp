#include "pmsmopt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "pmsmopt/errors.hpp"
#include "pmsmopt/sampling.hpp"

namespace pmsmopt {

std::string_view to_string(EvaluatorTag tag) {
  switch (tag) {
    case EvaluatorTag::reference:
      return "reference";
    case EvaluatorTag::surrogate:
      return "surrogate";
    case EvaluatorTag::analytic:
      return "analytic";
  }
  return "analytic";
}

EvaluatorTag evaluator_tag_from_string(std::string_view s) {
  if (s == "reference") return EvaluatorTag::reference;
  if (s == "surrogate") return EvaluatorTag::surrogate;
  if (s == "analytic") return EvaluatorTag::analytic;
  throw FormatError("unknown evaluator tag '" + std::string(s) + "'");
}

void finalize_feasibility(EvaluatedDesign& d) {
  d.violation = 0.0;
  for (double c : d.constraints) d.violation += std::max(0.0, c);
  d.feasible = d.violation == 0.0;
}

bool weakly_dominates(std::span<const double> a, std::span<const double> b) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(a[j] <= b[j])) return false;
  }
  return true;
}

bool pareto_dominates(std::span<const double> a, std::span<const double> b) {
  bool strict = false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(a[j] <= b[j])) return false;
    if (a[j] < b[j]) strict = true;
  }
  return strict;
}

bool dominates(const EvaluatedDesign& a, const EvaluatedDesign& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.violation < b.violation;
  return pareto_dominates(a.objectives, b.objectives);
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const EvaluatedDesign> pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> dominator_count(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(pop[p], pop[q])) {
        dominated_by_me[p].push_back(q);
        ++dominator_count[q];
      } else if (dominates(pop[q], pop[p])) {
        dominated_by_me[q].push_back(p);
        ++dominator_count[p];
      }
    }
  }

  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    if (dominator_count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      for (std::size_t q : dominated_by_me[p]) {
        if (--dominator_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const EvaluatedDesign> pop, std::span<const std::size_t> front) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), kInf);
    return dist;
  }
  const std::size_t m = pop[front[0]].objectives.size();
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < m; ++j) {
    auto value = [&](std::size_t k) { return pop[front[k]].objectives[j]; };
    bool finite = true;
    for (std::size_t k = 0; k < n; ++k) finite = finite && std::isfinite(value(k));
    if (!finite) continue;

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    const double range = value(order.back()) - value(order.front());
    if (range <= 0.0) continue;
    dist[order.front()] = kInf;
    dist[order.back()] = kInf;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
    }
  }
  return dist;
}

RankInfo rank_population(std::span<const EvaluatedDesign> pop) {
  RankInfo info;
  info.rank.assign(pop.size(), 0);
  info.crowding.assign(pop.size(), 0.0);
  const auto fronts = non_dominated_sort(pop);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    const auto dist = crowding_distance(pop, fronts[r]);
    for (std::size_t k = 0; k < fronts[r].size(); ++k) {
      info.rank[fronts[r][k]] = r;
      info.crowding[fronts[r][k]] = dist[k];
    }
  }
  return info;
}

std::size_t tournament_winner(const RankInfo& info, std::size_t a, std::size_t b, Rng& rng) {
  if (info.rank[a] != info.rank[b]) return info.rank[a] < info.rank[b] ? a : b;
  if (info.crowding[a] != info.crowding[b]) return info.crowding[a] > info.crowding[b] ? a : b;
  return rng.bernoulli(0.5) ? a : b;
}

std::size_t tournament_select(const RankInfo& info, Rng& rng) {
  const std::size_t n = info.rank.size();
  const std::size_t a = rng.below(n);
  const std::size_t b = rng.below(n);
  return tournament_winner(info, a, b, rng);
}

void OptimizerConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("optimizer.") + name + " must be in [0, 1]");
  };
  prob(crossover_probability, "crossover_probability");
  prob(mutation_probability, "mutation_probability");
  prob(integer_reset_probability, "integer_reset_probability");
  if (population_size < 2 || population_size % 2 != 0) {
    throw ConfigError("optimizer.population_size must be even and >= 2");
  }
  if (budget_multiplier < 1) throw ConfigError("optimizer.budget_multiplier must be >= 1");
  if (!(eta_c >= 0.0) || !(eta_m >= 0.0)) throw ConfigError("optimizer distribution indices must be >= 0");
  if (threads < 1) throw ConfigError("optimizer.threads must be >= 1");
}

std::size_t OptimizerConfig::effective_max_generations() const {
  return budget_multiplier * (max_generations + 1) - 1;
}

std::pair<std::vector<double>, std::vector<double>> sbx_crossover(std::span<const double> p1,
                                                                  std::span<const double> p2,
                                                                  std::span<const Variable> vars,
                                                                  const OptimizerConfig& cfg, Rng& rng) {
  std::vector<double> c1(p1.begin(), p1.end());
  std::vector<double> c2(p2.begin(), p2.end());
  if (!rng.bernoulli(cfg.crossover_probability)) return {c1, c2};

  const double exponent = 1.0 / (cfg.eta_c + 1.0);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].integer) {
      if (rng.bernoulli(0.5)) std::swap(c1[i], c2[i]);
    } else if (rng.bernoulli(0.5)) {
      const double u = rng.uniform();
      if (p1[i] == p2[i]) continue;
      const double beta = u <= 0.5 ? std::pow(2.0 * u, exponent) : std::pow(1.0 / (2.0 * (1.0 - u)), exponent);
      c1[i] = 0.5 * ((1.0 + beta) * p1[i] + (1.0 - beta) * p2[i]);
      c2[i] = 0.5 * ((1.0 - beta) * p1[i] + (1.0 + beta) * p2[i]);
      // Which child takes which value is decided per variable.
      if (rng.bernoulli(0.5)) std::swap(c1[i], c2[i]);
    }
    c1[i] = clamp_variable(c1[i], vars[i]);
    c2[i] = clamp_variable(c2[i], vars[i]);
  }
  return {c1, c2};
}

std::vector<double> polynomial_mutation(std::span<const double> x, std::span<const Variable> vars,
                                        const OptimizerConfig& cfg, Rng& rng) {
  std::vector<double> y(x.begin(), x.end());
  const double exponent = 1.0 / (cfg.eta_m + 1.0);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto& var = vars[i];
    if (var.integer) {
      if (rng.bernoulli(cfg.integer_reset_probability)) {
        const auto levels = static_cast<std::uint64_t>(var.upper - var.lower) + 1;
        y[i] = var.lower + static_cast<double>(rng.below(levels));
      }
      continue;
    }
    if (!rng.bernoulli(cfg.mutation_probability)) continue;
    const double span = var.upper - var.lower;
    if (span <= 0.0) continue;
    const double d1 = (y[i] - var.lower) / span;
    const double d2 = (var.upper - y[i]) / span;
    const double r = rng.uniform();
    double dq = 0.0;
    if (r < 0.5) {
      const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, cfg.eta_m + 1.0);
      dq = std::pow(val, exponent) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, cfg.eta_m + 1.0);
      dq = 1.0 - std::pow(val, exponent);
    }
    y[i] = clamp_variable(y[i] + dq * span, var);
  }
  return y;
}

double hypervolume_2d(std::span<const std::vector<double>> front, std::span<const double> reference) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : front) {
    if (p[0] < reference[0] && p[1] < reference[1]) pts.emplace_back(p[0], p[1]);
  }
  std::sort(pts.begin(), pts.end());
  double volume = 0.0;
  double level = reference[1];
  for (const auto& [f1, f2] : pts) {
    if (f2 < level) {
      volume += (reference[0] - f1) * (level - f2);
      level = f2;
    }
  }
  return volume;
}

double coverage(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) {
  if (b.empty()) return 0.0;
  std::size_t covered = 0;
  for (const auto& pb : b) {
    for (const auto& pa : a) {
      if (weakly_dominates(pa, pb)) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(b.size());
}

double generational_distance(std::span<const std::vector<double>> front,
                             std::span<const std::vector<double>> reference_front) {
  if (front.empty() || reference_front.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : front) {
    double best = HUGE_VAL;
    for (const auto& q : reference_front) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) d2 += (p[j] - q[j]) * (p[j] - q[j]);
      best = std::min(best, d2);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(front.size());
}

std::vector<double> margin_reference_point(std::span<const std::vector<double>> objectives) {
  if (objectives.empty()) return {};
  std::vector<double> worst(objectives.front().size(), -HUGE_VAL);
  for (const auto& p : objectives) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (std::isfinite(p[j])) worst[j] = std::max(worst[j], p[j]);
    }
  }
  for (double& w : worst) {
    if (!std::isfinite(w)) return {};
    w = w != 0.0 ? w + 0.1 * std::abs(w) : 0.1;
  }
  return worst;
}

// ---------------------------------------------------------------------------
// ParetoArchive

std::string ParetoArchive::dedupe_key(std::span<const double> x) {
  std::string key;
  char buf[32];
  for (double v : x) {
    if (v == 0.0) v = 0.0;  // fold -0
    std::snprintf(buf, sizeof(buf), "%.5e|", v);
    key += buf;
  }
  return key;
}

bool ParetoArchive::add(const EvaluatedDesign& d) {
  auto [it, inserted] = index_.emplace(dedupe_key(d.x), designs_.size());
  if (!inserted) return false;
  designs_.push_back(d);
  if (!d.feasible) return true;

  const std::size_t idx = designs_.size() - 1;
  for (std::size_t f : front_) {
    if (pareto_dominates(designs_[f].objectives, d.objectives)) return true;
  }
  std::erase_if(front_, [&](std::size_t f) { return pareto_dominates(d.objectives, designs_[f].objectives); });
  front_.push_back(idx);
  return true;
}

std::vector<EvaluatedDesign> ParetoArchive::pareto_front() const {
  auto ids = front_;
  std::sort(ids.begin(), ids.end());
  std::vector<EvaluatedDesign> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) out.push_back(designs_[i]);
  return out;
}

std::vector<std::vector<double>> ParetoArchive::front_objectives() const {
  auto ids = front_;
  std::sort(ids.begin(), ids.end());
  std::vector<std::vector<double>> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) out.push_back(designs_[i].objectives);
  return out;
}

// ---------------------------------------------------------------------------
// run

namespace {

using Clock = std::chrono::steady_clock;

// Evaluates xs in index order; with threads > 1 the work is spread over
// workers but results are stored by index. Rethrows the lowest-index failure.
std::vector<EvaluationResult> evaluate_batch(const Problem& problem, const std::vector<std::vector<double>>& xs,
                                             std::size_t threads) {
  std::vector<EvaluationResult> results(xs.size());
  std::vector<std::exception_ptr> errors(xs.size());
  auto work = [&](std::size_t i) {
    try {
      results[i] = problem.evaluate(xs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1 || xs.size() <= 1) {
    for (std::size_t i = 0; i < xs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, xs.size()); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < xs.size(); i = next++) work(i);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace

OptResult run(const OptimizerConfig& cfg, const Problem& problem, const GenerationCallback& on_generation) {
  cfg.validate();
  if (!problem.evaluate) throw ConfigError("problem has no evaluator");
  const auto& vars = problem.variables;
  const std::size_t pop_size = cfg.population_size;
  const std::size_t max_gen = cfg.effective_max_generations();

  OptResult result;
  std::uint64_t next_id = 0;

  auto evaluate = [&](const std::vector<std::vector<double>>& xs, std::size_t generation) {
    const auto start = Clock::now();
    auto evals = evaluate_batch(problem, xs, cfg.threads);
    result.timing.evaluation_wall_seconds += std::chrono::duration<double>(Clock::now() - start).count();

    std::vector<EvaluatedDesign> out;
    out.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto& e = evals[i];
      if (e.objectives.size() != problem.num_objectives || e.constraints.size() != problem.num_constraints) {
        throw EvaluatorFailure("evaluator returned wrong objective/constraint count");
      }
      EvaluatedDesign d;
      d.id = next_id++;
      d.x = xs[i];
      d.objectives = std::move(e.objectives);
      d.constraints = std::move(e.constraints);
      d.generation = generation;
      d.evaluator = problem.tag;
      d.physics_evaluated = e.physics_evaluated;
      d.measures = std::move(e.measures);
      finalize_feasibility(d);
      result.timing.measure_seconds += e.measure_seconds;
      result.timing.postprocess_seconds += e.postprocess_seconds;
      if (e.physics_evaluated) ++result.timing.physics_evaluations;
      out.push_back(std::move(d));
    }
    result.evaluations += xs.size();
    result.timing.evaluations = result.evaluations;
    return out;
  };

  std::vector<double> reference = cfg.reference_point.value_or(std::vector<double>{});
  auto fix_reference = [&](std::span<const EvaluatedDesign> pop) {
    if (!reference.empty()) return;
    std::vector<std::vector<double>> feasible, evaluated;
    for (const auto& d : pop) {
      if (!d.physics_evaluated) continue;
      evaluated.push_back(d.objectives);
      if (d.feasible) feasible.push_back(d.objectives);
    }
    reference = margin_reference_point(feasible.empty() ? evaluated : feasible);
  };

  auto record = [&](std::size_t generation, std::span<const EvaluatedDesign> pop) {
    GenerationStats s;
    s.generation = generation;
    const auto front = result.archive.front_objectives();
    s.front_size = front.size();
    s.hypervolume = reference.empty() ? 0.0 : hypervolume_2d(front, reference);
    s.feasible_count = static_cast<std::size_t>(
        std::count_if(pop.begin(), pop.end(), [](const EvaluatedDesign& d) { return d.feasible; }));
    s.evaluations = result.evaluations;
    s.archive_size = result.archive.size();
    result.history.push_back(s);
    if (on_generation) on_generation(s);
  };

  auto finish = [&](std::vector<EvaluatedDesign> pop) {
    result.population = std::move(pop);
    result.front = result.archive.pareto_front();
    result.reference_point = reference;
    return std::move(result);
  };

  // Generation 0.
  const auto init_seed = derive_seed(cfg.seed, stream::kInitialPopulation);
  auto initial = problem.initial_population ? problem.initial_population(pop_size, init_seed)
                                            : lhs_points(pop_size, vars, init_seed);
  if (initial.size() != pop_size) throw EvaluatorFailure("initial population has wrong size");

  std::vector<EvaluatedDesign> population;
  try {
    population = evaluate(initial, 0);
  } catch (const std::exception& e) {
    result.failure = e.what();
    return finish({});
  }
  for (const auto& d : population) result.archive.add(d);
  fix_reference(population);
  record(0, population);

  auto info = rank_population(population);
  for (std::size_t gen = 1; gen <= max_gen; ++gen) {
    Rng select_rng(derive_seed(cfg.seed, stream::kSelection, gen));
    Rng vary_rng(derive_seed(cfg.seed, stream::kVariation, gen));
    std::vector<std::vector<double>> children;
    children.reserve(pop_size);
    while (children.size() < pop_size) {
      const auto a = tournament_select(info, select_rng);
      const auto b = tournament_select(info, select_rng);
      auto [c1, c2] = sbx_crossover(population[a].x, population[b].x, vars, cfg, vary_rng);
      children.push_back(polynomial_mutation(c1, vars, cfg, vary_rng));
      children.push_back(polynomial_mutation(c2, vars, cfg, vary_rng));
    }

    std::vector<EvaluatedDesign> offspring;
    try {
      offspring = evaluate(children, gen);
    } catch (const std::exception& e) {
      result.failure = e.what();
      return finish(std::move(population));
    }
    for (const auto& d : offspring) result.archive.add(d);

    std::vector<EvaluatedDesign> merged = std::move(population);
    merged.insert(merged.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
    const auto fronts = non_dominated_sort(merged);
    std::vector<EvaluatedDesign> next;
    next.reserve(pop_size);
    for (const auto& front : fronts) {
      if (next.size() + front.size() <= pop_size) {
        for (auto i : front) next.push_back(merged[i]);
        continue;
      }
      const auto dist = crowding_distance(merged, front);
      std::vector<std::size_t> order(front.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
      for (std::size_t k = 0; next.size() < pop_size; ++k) next.push_back(merged[front[order[k]]]);
      break;
    }
    population = std::move(next);
    info = rank_population(population);

    fix_reference(population);
    record(gen, population);
    result.generations_executed = gen;

    const std::size_t w = cfg.convergence_window;
    if (cfg.convergence_threshold > 0.0 && w > 0 && result.history.size() > w) {
      const double old_hv = result.history[result.history.size() - 1 - w].hypervolume;
      const double new_hv = result.history.back().hypervolume;
      if (old_hv > 0.0 && (new_hv - old_hv) / old_hv < cfg.convergence_threshold) {
        result.converged = true;
        break;
      }
    }
  }
  return finish(std::move(population));
}

}  // namespace pmsmopt
