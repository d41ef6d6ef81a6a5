// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.
//
// usage: acceptance <work_dir> [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "pmsmopt/campaign.hpp"
#include "pmsmopt/io.hpp"
#include "pmsmopt/optimizer.hpp"
#include "pmsmopt/postprocess.hpp"
#include "pmsmopt/sampling.hpp"
#include "pmsmopt/surrogate.hpp"

using namespace pmsmopt;

namespace {

// Tolerances.
constexpr double kZdt1MinHv = 0.66;
constexpr double kZdt2MinHv = 0.32;
constexpr double kBenchmarkMaxSeconds = 60.0;
constexpr int kSortPopulations = 1000;
constexpr int kHvFronts = 50;
constexpr int kHvSamples = 1000000;
constexpr double kHvRelTol = 0.01;
constexpr int kSolverDesigns = 20;
constexpr int kSolverGrid = 201;
constexpr double kSolverRelTol = 0.005;
constexpr double kGradStep = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr double kOverfitMse = 1e-4;
constexpr double kFluxR2 = 0.97;
constexpr double kScalarR2 = 0.97;
constexpr double kPowerMape = 5.0;
constexpr double kCostMape = 3.0;
constexpr double kTrainMaxSeconds = 600.0;
constexpr double kHybridHvRatio = 0.95;
constexpr double kFactor2HvRatio = 0.98;
constexpr double kPlotR2 = 0.95;

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("[%s] criterion %2d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void criterion_1() {
  bool ok = true;
  std::string msg;
  for (const auto& [suite, floor] : {std::pair{"zdt1", kZdt1MinHv}, std::pair{"zdt2", kZdt2MinHv}}) {
    OptimizerConfig cfg;
    cfg.population_size = 100;
    cfg.max_generations = 250;
    cfg.seed = 1;
    const auto r = run_benchmark(suite, cfg);
    ok = ok && r.hypervolume >= floor && r.seconds < kBenchmarkMaxSeconds;
    msg += fmt("%s HV %.4f (>= %.2f, exact %.4f) in %.1f s, %zu gens; ", suite, r.hypervolume, floor,
               r.analytic_hypervolume, r.seconds, r.generations);
  }
  report(1, ok, "benchmark hypervolume: " + msg);
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> peel_fronts(const std::vector<EvaluatedDesign>& pop) {
  auto beats = [](const EvaluatedDesign& a, const EvaluatedDesign& b) {
    if (a.feasible != b.feasible) return a.feasible;
    if (!a.feasible) return a.violation < b.violation;
    const bool le = a.objectives[0] <= b.objectives[0] && a.objectives[1] <= b.objectives[1];
    const bool lt = a.objectives[0] < b.objectives[0] || a.objectives[1] < b.objectives[1];
    return le && lt;
  };
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<bool> taken(pop.size(), false);
  std::size_t left = pop.size();
  while (left > 0) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (taken[i]) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pop.size() && !dominated; ++j) dominated = !taken[j] && beats(pop[j], pop[i]);
      if (!dominated) front.push_back(i);
    }
    for (auto i : front) taken[i] = true;
    left -= front.size();
    fronts.push_back(front);
  }
  return fronts;
}

void criterion_2() {
  Rng rng(2);
  int mismatches = 0;
  for (int t = 0; t < kSortPopulations; ++t) {
    const auto n = 1 + rng.below(200);
    std::vector<EvaluatedDesign> pop(n);
    for (auto& d : pop) {
      d.objectives = {std::floor(rng.uniform(0, 20)), std::floor(rng.uniform(0, 20))};
      d.constraints = {rng.bernoulli(0.3) ? std::floor(rng.uniform(1, 6)) * 0.1 : -1.0};
      finalize_feasibility(d);
    }
    if (non_dominated_sort(pop) != peel_fronts(pop)) ++mismatches;
  }
  report(2, mismatches == 0,
         fmt("non-dominated sort vs O(n^2) peeling on %d populations: %d mismatches", kSortPopulations, mismatches));
}

// ---------------------------------------------------------------------------

void criterion_3() {
  Rng rng(3);
  double worst = 0.0;
  for (int t = 0; t < kHvFronts; ++t) {
    const auto n = 3 + rng.below(28);
    const double k = rng.uniform(0.4, 2.5);
    std::vector<std::vector<double>> front;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.uniform(0.0, 0.95);
      front.push_back({x, 0.95 * (1.0 - std::pow(x, k)) + rng.uniform(0.0, 0.04)});
    }
    const std::vector<double> ref{1.0, 1.0};
    const double exact = hypervolume_2d(front, ref);

    // A sample z is dominated iff some point has f1 <= z1 and f2 <= z2.
    auto pts = front;
    std::sort(pts.begin(), pts.end());
    std::vector<double> prefix_min(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) prefix_min[i] = std::min(pts[i][1], i ? prefix_min[i - 1] : 1e300);
    long hit = 0;
    for (int s = 0; s < kHvSamples; ++s) {
      const double z1 = rng.uniform();
      const double z2 = rng.uniform();
      const auto it = std::upper_bound(pts.begin(), pts.end(), z1,
                                       [](double v, const std::vector<double>& p) { return v < p[0]; });
      if (it != pts.begin() && prefix_min[static_cast<std::size_t>(it - pts.begin()) - 1] <= z2) ++hit;
    }
    const double mc = static_cast<double>(hit) / kHvSamples;
    worst = std::max(worst, std::abs(exact - mc) / mc);
  }
  report(3, worst <= kHvRelTol,
         fmt("2-D hypervolume vs %d-sample Monte Carlo on %d fronts: worst relative gap %.4f%% (<= %.1f%%)",
             kHvSamples, kHvFronts, 100 * worst, 100 * kHvRelTol));
}

// ---------------------------------------------------------------------------

void criterion_4() {
  const auto designs = lhs_feasible({kSolverDesigns, 404, 100}, DesignSpec::defaults());
  const double speeds_rpm[] = {1000, 4000, 8000, 12000, 16000};
  double worst_shortfall = 0.0;
  double worst_excess = 0.0;
  bool feasible = true;
  int flagged = 0;
  for (const auto& v : designs) {
    const auto m = evaluate_measures(v);
    const auto env = make_envelope(v);
    for (double rpm : speeds_rpm) {
      const double w = rpm_to_rad_per_s(rpm);
      double best = 0.0;
      for (int a = 0; a < kSolverGrid; ++a) {
        const double gamma = M_PI / 2 * (1 + a / (kSolverGrid - 1.0));
        for (int k = 0; k < kSolverGrid; ++k) {
          const double amp = env.i_max * k / (kSolverGrid - 1.0);
          const double i_d = std::min(0.0, amp * std::cos(gamma));
          const double i_q = std::max(0.0, amp * std::sin(gamma));
          const auto f = interp_flux(m, env.i_max, i_d, i_q);
          if (voltage_magnitude(f.psi_d, f.psi_q, i_d, i_q, env.pole_pairs * w, env.r_s) > env.u_max) continue;
          best = std::max(best, torque(f.psi_d, f.psi_q, i_d, i_q, env.pole_pairs));
        }
      }
      const auto op = max_torque_at_speed(m, v, w);
      // A flagged point means no current meets the voltage limit; the grid must agree.
      if (op.feasible) {
        feasible = feasible && op.u_mag <= env.u_max * (1 + 1e-12) &&
                   std::hypot(op.i_d, op.i_q) <= env.i_max * (1 + 1e-12);
      } else {
        feasible = feasible && best == 0.0 && op.torque == 0.0;
        ++flagged;
      }
      if (best > 0.0) {
        worst_shortfall = std::max(worst_shortfall, (best - op.torque) / best);
        worst_excess = std::max(worst_excess, (op.torque - best) / best);
      }
    }
  }
  report(4, feasible && worst_shortfall <= kSolverRelTol,
         fmt("max-torque solver vs %dx%d grid, %d designs x 5 speeds: worst shortfall %.3f%% (<= %.1f%%), "
             "solver above grid by up to %.3f%%, returned points within limits: %s (%d speeds above the no-load limit "
             "flagged, grid empty there too)",
             kSolverGrid, kSolverGrid, kSolverDesigns, 100 * worst_shortfall, 100 * kSolverRelTol, 100 * worst_excess,
             feasible ? "yes" : "no", flagged));
}

// ---------------------------------------------------------------------------

void criterion_5() {
  Network net;
  net.initialize(55);
  Rng rng(5);
  auto& p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += rng.uniform(-0.05, 0.05);
  Eigen::MatrixXd x(14, 5), yf(162, 5), ys(3, 5);
  for (auto* m : {&x, &yf, &ys}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.uniform(-1.0, 1.0);
  }
  Eigen::VectorXd grad;
  net.loss_and_gradient(x, yf, ys, grad);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + kGradStep;
    const double up = net.loss(x, yf, ys);
    p[i] = saved - kGradStep;
    const double down = net.loss(x, yf, ys);
    p[i] = saved;
    const double numeric = (up - down) / (2 * kGradStep);
    worst = std::max(worst, std::abs(grad[i] - numeric) / std::max({std::abs(grad[i]), std::abs(numeric), 1e-6}));
  }

  const auto designs = lhs_feasible({16, 16, 100}, DesignSpec::defaults());
  const auto ds = build_dataset(designs);
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.max_epochs = 2000;
  cfg.batch_size = 16;
  cfg.validation_fraction = 0.0;
  cfg.patience = 0;
  const auto model = train(ds, cfg);
  double sse = 0.0;
  for (const auto& r : ds.records) {
    Eigen::VectorXd z(165);
    model.network.forward_one(model.scaler.transform_input(r.design.span()), z);
    sse += (z - model.scaler.transform_output(r.measures.flatten())).squaredNorm();
  }
  const double mse = sse / (16.0 * 165.0);
  report(5, worst < kGradRelTol && mse < kOverfitMse,
         fmt("gradient check over %zu parameters: max relative error %.2e (< %.0e); 16-sample overfit "
             "standardized MSE %.2e (< %.0e)",
             net.num_parameters(), worst, kGradRelTol, mse, kOverfitMse));
}

// ---------------------------------------------------------------------------

struct CampaignRun {
  CampaignReport report;
  double seconds = 0.0;
  fs::path root;
};

CampaignRun run_campaign(const fs::path& root) {
  auto cfg = load_config(PMSMOPT_DEFAULT_CONFIG);
  cfg.paths.dataset = root / "dataset.csv";
  cfg.paths.model = root / "model.bin";
  cfg.paths.results = root / "results";
  fs::remove_all(root);
  const auto t0 = std::chrono::steady_clock::now();
  CampaignRun r{cmd_campaign(cfg), 0.0, root};
  r.seconds = seconds_since(t0);
  return r;
}

void criterion_6(const CampaignRun& run) {
  const auto& t = run.report.training;
  const auto& m = t.test;
  const bool ok = m.flux.r2 >= kFluxR2 && m.scalar_group_r2() >= kScalarR2 && m.max_power.mape <= kPowerMape &&
                  m.cost.mape <= kCostMape && t.seconds < kTrainMaxSeconds && m.samples == 500;
  report(6, ok,
         fmt("surrogate on %zu held-out designs (trained on %zu + %zu validation): flux R2 %.5f (>= %.2f), "
             "scalar R2 min %.5f (>= %.2f), max-power MAPE %.3f%% (<= %.0f%%), cost MAPE %.3f%% (<= %.0f%%), "
             "training %.1f s (< %.0f s)",
             m.samples, t.metadata.train_samples, t.metadata.validation_samples, m.flux.r2, kFluxR2,
             m.scalar_group_r2(), kScalarR2, m.max_power.mape, kPowerMape, m.cost.mape, kCostMape, t.seconds,
             kTrainMaxSeconds));
}

void criterion_7(const CampaignRun& run) {
  const auto& r = run.report;
  const auto& c = r.classical.result;
  const auto& h = r.hybrid.result;
  const auto& f = r.factor2.result;

  const bool shared_ref = c.reference_point == h.reference_point && c.reference_point == f.reference_point;
  bool shared_initial = c.archive.size() >= 64 && h.archive.size() >= 64 && f.archive.size() >= 64;
  for (std::size_t i = 0; shared_initial && i < 64; ++i) {
    shared_initial = c.archive.designs()[i].x == h.archive.designs()[i].x &&
                     c.archive.designs()[i].x == f.archive.designs()[i].x;
  }
  const bool doubled = f.evaluations == 2 * h.evaluations;
  const double ratio_h = r.hybrid_vs_classical.ratio;
  const double ratio_f = r.factor2_vs_classical.ratio;

  auto per_eval = [](const OptResult& o) {
    return o.timing.measure_seconds / static_cast<double>(std::max<std::size_t>(o.timing.physics_evaluations, 1));
  };
  auto per_eval_total = [](const OptResult& o) {
    return (o.timing.measure_seconds + o.timing.postprocess_seconds) /
           static_cast<double>(std::max<std::size_t>(o.timing.physics_evaluations, 1));
  };
  const double tc = per_eval(c);
  const double th = per_eval(h);

  const bool ok = shared_ref && shared_initial && doubled && ratio_h >= kHybridHvRatio && ratio_f >= kFactor2HvRatio &&
                  th < tc;
  report(7, ok,
         fmt("classical %zu evals / hybrid %zu / factor2 %zu (2x: %s), shared generation 0: %s, shared reference "
             "point: %s; HV hybrid/classical %.4f (>= %.2f), factor2/classical %.4f (>= %.2f); measure time per "
             "evaluation hybrid %.3g s vs classical %.3g s (ratio %.2f), incl. post-processing %.3g vs %.3g s",
             c.evaluations, h.evaluations, f.evaluations, doubled ? "yes" : "no", shared_initial ? "yes" : "no",
             shared_ref ? "yes" : "no", ratio_h, kHybridHvRatio, ratio_f, kFactor2HvRatio, th, tc, tc / th,
             per_eval_total(h), per_eval_total(c)));
}

void criterion_8(const CampaignRun& run) {
  const auto& p = run.report.predict_plot;
  report(8, p.rows > 1 && p.max_power.r2 >= kPlotR2,
         fmt("hybrid front re-evaluated with the reference model: %zu designs, max-power R2 %.5f (>= %.2f), "
             "MAPE %.3f%%",
             p.rows, p.max_power.r2, kPlotR2, p.max_power.mape));
}

void criterion_9(const CampaignRun& first, const fs::path& second_root) {
  const auto second = run_campaign(second_root);
  int compared = 0;
  std::vector<std::string> differing;
  for (const char* mode : {"classical", "hybrid", "factor2"}) {
    for (const char* file : {"archive.csv", "front.json", "history.csv"}) {
      const auto rel = fs::path("results") / mode / file;
      ++compared;
      if (read_file(first.root / rel) != read_file(second.root / rel)) differing.push_back(rel.string());
    }
  }
  std::string list;
  for (const auto& d : differing) list += " " + d;
  report(9, differing.empty(),
         fmt("campaign rerun with identical seeds: %d/%d archive/front/history files byte-identical%s%s", compared -
             static_cast<int>(differing.size()), compared, differing.empty() ? "" : "; differing:", list.c_str()));
}

// ---------------------------------------------------------------------------

void criterion_10() {
  const auto spec = DesignSpec::defaults();
  bool stratified = true;
  for (std::size_t n : {5u, 64u, 1000u}) {
    const auto designs = lhs_sample({n, 10 + n, 100}, spec);
    for (std::size_t d = 0; d < kNumParams; ++d) {
      const auto& p = spec.params[d];
      if (p.kind != ParamKind::continuous) continue;
      std::vector<int> hits(n, 0);
      for (const auto& v : designs) {
        auto k = static_cast<std::size_t>(std::floor((v.values[d] - p.lower) / (p.upper - p.lower) * n));
        hits[std::min(k, n - 1)]++;
      }
      stratified = stratified && std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
    }
  }
  std::size_t checked = 0;
  bool feasible = true;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& v : lhs_feasible({500, seed, 100}, spec)) {
      feasible = feasible && geometry_check(v, spec.limits).feasible;
      ++checked;
    }
  }
  report(10, stratified && feasible,
         fmt("LHS strata exact on N = 5, 64, 1000: %s; %zu lhs_feasible designs pass the geometry check: %s",
             stratified ? "yes" : "no", checked, feasible ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::stoi(argv[i]));
  auto wanted = [&](int id) { return only.empty() || only.contains(id); };

  try {
    if (wanted(1)) criterion_1();
    if (wanted(2)) criterion_2();
    if (wanted(3)) criterion_3();
    if (wanted(4)) criterion_4();
    if (wanted(5)) criterion_5();
    if (wanted(6) || wanted(7) || wanted(8) || wanted(9)) {
      const auto run = run_campaign(work / "run1");
      std::printf("(default campaign: %.1f s)\n", run.seconds);
      if (wanted(6)) criterion_6(run);
      if (wanted(7)) criterion_7(run);
      if (wanted(8)) criterion_8(run);
      if (wanted(9)) criterion_9(run, work / "run2");
    }
    if (wanted(10)) criterion_10();
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
