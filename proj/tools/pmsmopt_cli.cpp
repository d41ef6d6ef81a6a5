// pmsmopt: command-line front end for the campaign commands.
//
// Exit codes: 0 ok, 2 config/integrity, 3 infeasible sampling, 4 I/O or
// file format, 5 internal failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pmsmopt/campaign.hpp"
#include "pmsmopt/errors.hpp"
#include "pmsmopt/io.hpp"

using namespace pmsmopt;

namespace {

enum Exit { kOk = 0, kConfig = 2, kInfeasible = 3, kIo = 4, kInternal = 5 };

void print_metrics(const ModelMetrics& m) {
  std::printf("test samples      %zu\n", m.samples);
  std::printf("flux R2           %.5f  MAPE %.3f%%\n", m.flux.r2, m.flux.mape);
  std::printf("scalar R2 (min)   %.5f  [c_hy %.5f, c_ed %.5f, psi_ref %.5f]\n", m.scalar_group_r2(), m.scalars[0].r2,
              m.scalars[1].r2, m.scalars[2].r2);
  std::printf("max power R2      %.5f  MAPE %.3f%%\n", m.max_power.r2, m.max_power.mape);
  std::printf("cost R2           %.5f  MAPE %.3f%%\n", m.cost.r2, m.cost.mape);
}

void print_optimize(const OptimizeReport& r) {
  const auto& res = r.result;
  std::printf("%s: %zu generations, %zu evaluations, front %zu, HV %.6g%s\n", r.dir.string().c_str(),
              res.generations_executed, res.evaluations, res.front.size(), r.hypervolume,
              res.converged ? " (converged)" : "");
  const auto& t = res.timing;
  if (t.physics_evaluations > 0) {
    const double n = static_cast<double>(t.physics_evaluations);
    std::printf("  per evaluation: measures %.3g s, post-processing %.3g s\n", t.measure_seconds / n,
                t.postprocess_seconds / n);
  }
}

void print_compare(const char* label, const CompareReport& r) {
  std::printf("%s: HV(A) %.6g  HV(B) %.6g  ratio B/A %.4f  C(A,B) %.3f  C(B,A) %.3f\n", label, r.hv_a, r.hv_b,
              r.ratio, r.c_ab, r.c_ba);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-assisted PMSM design optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path;
  std::string results_override;
  std::size_t threads = 0;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--results", results_override, "Override paths.results");
    sub->add_option("--threads", threads, "Evaluation threads (overrides optimizer.threads)");
  };

  auto* dataset = app.add_subcommand("dataset", "Sample designs and write the training dataset");
  add_config(dataset);

  auto* train = app.add_subcommand("train", "Train the surrogate on the dataset");
  add_config(train);

  std::string mode = "classical";
  std::string paired;
  std::string reference_from;
  std::string out_dir;
  auto* optimize = app.add_subcommand("optimize", "Run one optimization (classical, hybrid or factor2)");
  add_config(optimize);
  optimize->add_option("-m,--mode", mode, "classical | hybrid | factor2")
      ->check(CLI::IsMember({"classical", "hybrid", "factor2"}));
  optimize->add_option("--paired", paired, "factor2: hybrid bundle whose generation count to double");
  optimize->add_option("--reference-from", reference_from, "Bundle whose hypervolume reference point to reuse");
  optimize->add_option("--out", out_dir, "Bundle directory (default <results>/<mode>)");

  std::string bundle_a;
  std::string bundle_b;
  std::string out_prefix;
  auto* compare = app.add_subcommand("compare", "Compare the fronts of two result bundles");
  compare->add_option("bundle_a", bundle_a)->required()->check(CLI::ExistingDirectory);
  compare->add_option("bundle_b", bundle_b)->required()->check(CLI::ExistingDirectory);
  compare->add_option("-o,--out", out_prefix, "Output prefix (writes .json and _plot.csv)")->required();

  std::string hybrid_bundle;
  auto* predict_plot = app.add_subcommand("predict-plot", "Predicted vs reference KPIs of a hybrid front");
  add_config(predict_plot);
  predict_plot->add_option("bundle", hybrid_bundle)->required()->check(CLI::ExistingDirectory);
  predict_plot->add_option("-o,--out", out_prefix, "Output prefix (writes .csv and .json)");

  std::string suite;
  std::size_t bench_pop = 100;
  std::size_t bench_gens = 250;
  std::uint64_t bench_seed = 1;
  auto* benchmark = app.add_subcommand("benchmark", "Run the optimizer on an analytic benchmark");
  benchmark->add_option("suite", suite)->required()->check(CLI::IsMember({"zdt1", "zdt2", "constrained-demo"}));
  benchmark->add_option("--population", bench_pop)->capture_default_str();
  benchmark->add_option("--generations", bench_gens)->capture_default_str();
  benchmark->add_option("--seed", bench_seed)->capture_default_str();
  benchmark->add_option("--results", results_override, "Results directory")->default_str("results");

  auto* campaign = app.add_subcommand("campaign", "dataset, train, classical/hybrid/factor2, compare, predict-plot");
  add_config(campaign);

  CLI11_PARSE(app, argc, argv);

  try {
    auto load = [&] {
      auto cfg = load_config(config_path);
      if (!results_override.empty()) cfg.paths.results = results_override;
      if (threads > 0) cfg.optimizer.threads = threads;
      return cfg;
    };

    if (dataset->parsed()) {
      const auto r = cmd_dataset(load());
      std::printf("wrote %zu designs to %s (spec %s)\n", r.rows, r.path.string().c_str(), r.spec_hash.c_str());
    } else if (train->parsed()) {
      const auto r = cmd_train(load());
      std::printf("trained %zu epochs (best %zu) in %.1f s\n", r.metadata.epochs_run, r.metadata.best_epoch,
                  r.seconds);
      print_metrics(r.test);
      std::printf("metrics: %s\n", r.metrics_path.string().c_str());
    } else if (optimize->parsed()) {
      OptimizeOptions opts;
      opts.mode = run_mode_from_string(mode);
      if (!paired.empty()) opts.paired = paired;
      if (!reference_from.empty()) opts.reference_from = reference_from;
      if (!out_dir.empty()) opts.out_dir = out_dir;
      print_optimize(cmd_optimize(load(), opts));
    } else if (compare->parsed()) {
      print_compare("compare", cmd_compare(bundle_a, bundle_b, out_prefix));
    } else if (predict_plot->parsed()) {
      const auto cfg = load();
      const fs::path out = out_prefix.empty() ? cfg.paths.results / "predict_plot" : fs::path(out_prefix);
      const auto r = cmd_predict_plot(cfg, hybrid_bundle, out);
      std::printf("%zu designs: max power R2 %.5f MAPE %.3f%%, cost R2 %.5f MAPE %.3f%%\n", r.rows,
                  r.max_power.r2, r.max_power.mape, r.cost.r2, r.cost.mape);
    } else if (benchmark->parsed()) {
      CampaignConfig cfg;
      cfg.paths.results = results_override.empty() ? fs::path("results") : fs::path(results_override);
      OptimizerConfig opt;
      opt.population_size = bench_pop;
      opt.max_generations = bench_gens;
      opt.seed = bench_seed;
      opt.validate();
      const auto r = cmd_benchmark(suite, cfg, opt);
      std::printf("%s: HV %.5f of %.5f (%.2f%%), GD mean %.2e max %.2e, front %zu, %zu generations, %.2f s\n",
                  r.suite.c_str(), r.hypervolume, r.analytic_hypervolume, 100.0 * r.hypervolume / r.analytic_hypervolume,
                  r.gd_mean, r.gd_max, r.front_size, r.generations, r.seconds);
      if (r.suite == "constrained-demo") std::printf("points in excluded band: %zu\n", r.excluded_points);
    } else if (campaign->parsed()) {
      const auto r = cmd_campaign(load());
      std::printf("dataset: %zu designs\n", r.dataset.rows);
      print_metrics(r.training.test);
      print_optimize(r.classical);
      print_optimize(r.hybrid);
      print_optimize(r.factor2);
      print_compare("hybrid vs classical", r.hybrid_vs_classical);
      print_compare("factor2 vs classical", r.factor2_vs_classical);
      std::printf("hybrid front re-evaluated: max power R2 %.5f, cost R2 %.5f\n", r.predict_plot.max_power.r2,
                  r.predict_plot.cost.r2);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kConfig;
  } catch (const TooFewSamples& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const FeasibilityExhausted& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
