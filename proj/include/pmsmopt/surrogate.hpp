#pragma once

// Multi-branch feedforward meta-model: design parameters -> intermediate
// measures. A shared tanh trunk feeds a flux head (both 9x9 maps) and a scalar
// head (c_hy, c_ed, psi_ref). Trained with mini-batch Adam on z-scored
// outputs; persisted in a versioned binary container (docs/model_format.md).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmsmopt/design_space.hpp"
#include "pmsmopt/machine_model.hpp"

namespace pmsmopt {

// ---------------------------------------------------------------------------
// Dataset

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

struct DatasetRecord {
  DesignVector design;
  IntermediateMeasures measures;
  Split split = Split::train;
};

struct Dataset {
  std::vector<DatasetRecord> records;

  std::size_t size() const { return records.size(); }
  std::vector<DatasetRecord> subset(Split split) const;
};

using ReferenceEvaluator = std::function<IntermediateMeasures(const DesignVector&)>;

Dataset build_dataset(std::span<const DesignVector> designs, const ReferenceEvaluator& reference = evaluate_measures);

/// Tags `test_count` records, chosen by a seeded shuffle, as the test split.
void tag_test_split(Dataset& ds, std::size_t test_count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Network

struct Architecture {
  std::size_t inputs = kNumParams;
  std::vector<std::size_t> trunk{64, 64};
  std::size_t head_hidden = 32;
  std::size_t flux_outputs = IntermediateMeasures::kFluxOutputs;
  std::size_t scalar_outputs = IntermediateMeasures::kScalarOutputs;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Dense tanh network with a shared trunk and two linear-output heads. All
/// weights and biases live in one flat parameter vector so the optimizer and
/// the finite-difference checks can treat them uniformly. Samples are columns.
class Network {
 public:
  Network() : Network(Architecture{}) {}
  explicit Network(Architecture arch);

  const Architecture& architecture() const { return arch_; }

  /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
  void initialize(std::uint64_t seed);

  std::size_t num_parameters() const { return static_cast<std::size_t>(params_.size()); }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  struct Output {
    Eigen::MatrixXd flux;
    Eigen::MatrixXd scalars;
  };

  Output forward(const Eigen::MatrixXd& x) const;

  /// Single-sample forward pass: writes flux outputs then scalar outputs
  /// into `out` (flux_outputs + scalar_outputs entries).
  void forward_one(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const;

  /// 0.5 * MSE(flux head) + 0.5 * MSE(scalar head).
  double loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_flux, const Eigen::MatrixXd& y_scalar) const;

  /// Same loss; writes d(loss)/d(parameters) into grad.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_flux, const Eigen::MatrixXd& y_scalar,
                           Eigen::VectorXd& grad) const;

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t offset = 0;  // weights (out x in, column-major), then bias (out)
    bool tanh = true;
  };

  Eigen::Map<const Eigen::MatrixXd> weights(const Layer& l) const;
  Eigen::Map<const Eigen::VectorXd> bias(const Layer& l) const;

  Architecture arch_;
  std::vector<Layer> trunk_;
  std::vector<Layer> flux_head_;
  std::vector<Layer> scalar_head_;
  Eigen::VectorXd params_;
};

// ---------------------------------------------------------------------------
// Scaling

struct Scaler {
  std::vector<double> in_lower;
  std::vector<double> in_range;
  std::vector<double> out_mean;
  std::vector<double> out_std;

  static constexpr double kStdFloor = 1e-12;

  /// Inputs min-max by the spec bounds; outputs z-scored on `train`.
  static Scaler fit(const DesignSpec& spec, std::span<const DatasetRecord> train);

  Eigen::VectorXd transform_input(std::span<const double> x) const;
  Eigen::VectorXd transform_output(std::span<const double> y) const;
  std::vector<double> inverse_output(const Eigen::Ref<const Eigen::VectorXd>& z) const;
};

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t max_epochs = 500;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Share of non-test records held out for checkpoint selection. 0 trains on
  /// everything and returns the final weights.
  double validation_fraction = 0.2;
  /// Early-stop after this many epochs without validation improvement; 0 disables.
  std::size_t patience = 50;
  Architecture architecture{};

  void validate() const;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  double train_loss = 0.0;       // at the returned weights
  double validation_loss = 0.0;  // at the returned weights (0 without validation)
  std::string spec_hash;
  std::vector<double> train_history;
  std::vector<double> validation_history;
};

struct MetaModel {
  Network network;
  Scaler scaler;
  TrainingMetadata metadata;

  IntermediateMeasures predict(const DesignVector& v) const;
};

/// Trains on the non-test records. Throws TooFewSamples with fewer than 10
/// training records. Deterministic in (data, cfg).
MetaModel train(const Dataset& ds, const TrainConfig& cfg, const DesignSpec& spec = DesignSpec::defaults());

IntermediateMeasures predict(const MetaModel& model, const DesignVector& v);

// ---------------------------------------------------------------------------
// Metrics

struct FitMetrics {
  double r2 = 0.0;
  double mape = 0.0;  // percent
};

struct ModelMetrics {
  std::size_t samples = 0;
  FitMetrics flux;                      // both maps pooled
  std::array<FitMetrics, 3> scalars{};  // c_hy, c_ed, psi_ref
  FitMetrics max_power;                 // P_max through the shared post-processing
  FitMetrics cost;

  /// Worst scalar R2.
  double scalar_group_r2() const;
};

/// R2 = 1 - SS_res / SS_tot around the reference mean. MAPE skips reference
/// values with magnitude below `mape_floor`.
FitMetrics fit_metrics(std::span<const double> reference, std::span<const double> predicted, double mape_floor = 0.0);

ModelMetrics evaluate_model(const MetaModel& model, std::span<const DatasetRecord> records);

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save(const MetaModel& model, const std::filesystem::path& path);
MetaModel load(const std::filesystem::path& path);

std::string serialize_model(const MetaModel& model);
MetaModel deserialize_model(std::string_view bytes);

}  // namespace pmsmopt
