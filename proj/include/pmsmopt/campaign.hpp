#pragma once

// Campaign orchestration: configuration, artifact files and the commands
// behind the CLI (dataset, train, optimize, compare, predict-plot, benchmark).
// Every artifact carries the tool version and config hash, either inline
// (JSON) or in a "<file>.meta.json" sidecar (CSV, model).

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmsmopt/design_space.hpp"
#include "pmsmopt/optimizer.hpp"
#include "pmsmopt/postprocess.hpp"
#include "pmsmopt/problems.hpp"
#include "pmsmopt/sampling.hpp"
#include "pmsmopt/surrogate.hpp"

namespace pmsmopt {

namespace fs = std::filesystem;

struct PathsConfig {
  fs::path dataset = "campaign/dataset.csv";
  fs::path model = "campaign/model.bin";
  fs::path results = "campaign/results";
};

struct CampaignConfig {
  DesignSpec spec = DesignSpec::defaults();
  SamplingConfig sampling{2500, 0, 100};
  TrainConfig training;
  /// Records held out of training for the metrics report.
  std::size_t test_count = 500;
  OptimizerConfig optimizer;
  PathsConfig paths;

  void validate() const;
};

/// Parses the JSON config. Unknown keys are errors; sampling.seed,
/// training.seed and optimizer.seed are mandatory. Relative paths are kept
/// as written (resolved against the working directory).
CampaignConfig parse_config(std::string_view json_text);
CampaignConfig load_config(const fs::path& path);

/// Canonical JSON of everything that influences results (paths and thread
/// count excluded).
std::string canonical_config(const CampaignConfig& cfg);
std::string config_hash(const CampaignConfig& cfg);

// ---------------------------------------------------------------------------
// Dataset file

std::vector<std::string> dataset_columns();
std::string dataset_to_csv(const Dataset& ds);
/// Strict parse; checks the header and the column count of every row.
Dataset dataset_from_csv(std::string_view text);

struct DatasetReport {
  fs::path path;
  std::size_t rows = 0;
  std::string spec_hash;
};

DatasetReport cmd_dataset(const CampaignConfig& cfg);

/// Reads the dataset and its sidecar; IntegrityError on a spec-hash or
/// content-hash mismatch.
Dataset load_dataset(const fs::path& path, const DesignSpec& spec);

// ---------------------------------------------------------------------------
// Training

struct TrainReport {
  ModelMetrics test;  // samples == 0 without a test slice
  TrainingMetadata metadata;
  double seconds = 0.0;
  fs::path metrics_path;
};

TrainReport cmd_train(const CampaignConfig& cfg);

/// Loads the model and checks its sidecar and spec hash.
MetaModel load_verified_model(const fs::path& path, const DesignSpec& spec);

// ---------------------------------------------------------------------------
// Optimization bundles

enum class RunMode { classical, hybrid, factor2 };

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view s);

struct OptimizeOptions {
  RunMode mode = RunMode::classical;
  /// factor2: take G from this hybrid bundle and disable stagnation stopping,
  /// so the evaluation count is exactly twice the paired run's.
  std::optional<fs::path> paired;
  /// Reuse the hypervolume reference point of another bundle.
  std::optional<fs::path> reference_from;
  /// Defaults to <results>/<mode>.
  std::optional<fs::path> out_dir;
};

struct FrontEntry {
  std::uint64_t id = 0;
  std::vector<double> params;
  double max_power_w = 0.0;
  double cost = 0.0;
  std::vector<double> constraints;
  bool feasible = true;
  std::string evaluator;

  std::vector<double> objectives() const { return {-max_power_w, cost}; }
};

struct Bundle {
  fs::path dir;
  std::string mode;
  std::string config_hash;
  std::string spec_hash;
  std::string kpi_hash;
  std::vector<double> reference_point;
  std::size_t evaluations = 0;
  std::size_t generations_executed = 0;
  std::size_t population_size = 0;
  std::vector<FrontEntry> front;
};

struct OptimizeReport {
  fs::path dir;
  OptResult result;
  double hypervolume = 0.0;
};

OptimizeReport cmd_optimize(const CampaignConfig& cfg, const OptimizeOptions& opts);

/// Reads meta.json and front.json, verifying the recorded file hashes.
Bundle load_bundle(const fs::path& dir);

std::string archive_to_csv(const ParetoArchive& archive);
std::string history_to_csv(const std::vector<GenerationStats>& history);

// ---------------------------------------------------------------------------
// Comparison and prediction plot

struct CompareReport {
  std::vector<double> reference_point;
  double hv_a = 0.0;
  double hv_b = 0.0;
  double ratio = 0.0;     // hv_b / hv_a
  double c_ab = 0.0;      // C(A, B)
  double c_ba = 0.0;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
};

/// Pure front comparison with a shared margin reference point.
CompareReport compare_fronts(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

/// Writes <out>.json and <out>_plot.csv. IntegrityError when the bundles use
/// different KPI definitions.
CompareReport cmd_compare(const fs::path& bundle_a, const fs::path& bundle_b, const fs::path& out);

struct PredictPlotReport {
  std::size_t rows = 0;
  FitMetrics max_power;
  FitMetrics cost;
  fs::path csv_path;
};

/// Re-evaluates every design of a hybrid bundle's front with `reference`.
PredictPlotReport cmd_predict_plot(const CampaignConfig& cfg, const fs::path& bundle_dir, const fs::path& out,
                                   const MeasureSource& reference = evaluate_measures);

// ---------------------------------------------------------------------------
// Benchmarks

struct BenchmarkReport {
  std::string suite;
  double hypervolume = 0.0;
  double analytic_hypervolume = 0.0;
  double gd_mean = 0.0;
  double gd_max = 0.0;
  std::size_t front_size = 0;
  /// constrained-demo: returned front points inside the excluded band.
  std::size_t excluded_points = 0;
  std::size_t generations = 0;
  double seconds = 0.0;
};

BenchmarkReport run_benchmark(std::string_view suite, const OptimizerConfig& cfg);

/// Runs the suite and writes <results>/benchmark/<suite>.json.
BenchmarkReport cmd_benchmark(std::string_view suite, const CampaignConfig& cfg, const OptimizerConfig& opt);

// ---------------------------------------------------------------------------

struct CampaignReport {
  DatasetReport dataset;
  TrainReport training;
  OptimizeReport classical;
  OptimizeReport hybrid;
  OptimizeReport factor2;
  CompareReport hybrid_vs_classical;
  CompareReport factor2_vs_classical;
  PredictPlotReport predict_plot;
};

/// dataset -> train -> classical -> hybrid -> factor2 -> compare -> predict-plot.
CampaignReport cmd_campaign(const CampaignConfig& cfg);

}  // namespace pmsmopt
