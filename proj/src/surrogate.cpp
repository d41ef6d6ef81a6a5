#include "pmsmopt/surrogate.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "pmsmopt/errors.hpp"
#include "pmsmopt/io.hpp"
#include "pmsmopt/postprocess.hpp"
#include "pmsmopt/random.hpp"

namespace pmsmopt {

// ===========================================================================
// Dataset

std::vector<DatasetRecord> Dataset::subset(Split split) const {
  std::vector<DatasetRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

Dataset build_dataset(std::span<const DesignVector> designs, const ReferenceEvaluator& reference) {
  Dataset ds;
  ds.records.reserve(designs.size());
  for (const auto& v : designs) ds.records.push_back({v, reference(v), Split::train});
  return ds;
}

void tag_test_split(Dataset& ds, std::size_t test_count, std::uint64_t seed) {
  if (test_count > ds.size()) throw TooFewSamples("test split larger than dataset");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, stream::kSplit));
  rng.shuffle(std::span<std::size_t>(order));
  for (auto& r : ds.records) r.split = Split::train;
  for (std::size_t k = 0; k < test_count; ++k) ds.records[order[k]].split = Split::test;
}

// ===========================================================================
// Network

Network::Network(Architecture arch) : arch_(std::move(arch)) {
  std::size_t offset = 0;
  auto add = [&](std::vector<Layer>& chain, std::size_t in, std::size_t out, bool act) {
    chain.push_back({in, out, offset, act});
    offset += out * in + out;
  };
  std::size_t width = arch_.inputs;
  for (std::size_t h : arch_.trunk) {
    add(trunk_, width, h, true);
    width = h;
  }
  add(flux_head_, width, arch_.head_hidden, true);
  add(flux_head_, arch_.head_hidden, arch_.flux_outputs, false);
  add(scalar_head_, width, arch_.head_hidden, true);
  add(scalar_head_, arch_.head_hidden, arch_.scalar_outputs, false);
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

Eigen::Map<const Eigen::MatrixXd> Network::weights(const Layer& l) const {
  return {params_.data() + l.offset, static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in)};
}

Eigen::Map<const Eigen::VectorXd> Network::bias(const Layer& l) const {
  return {params_.data() + l.offset + l.out * l.in, static_cast<Eigen::Index>(l.out)};
}

void Network::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, stream::kWeightInit));
  params_.setZero();
  for (const auto* chain : {&trunk_, &flux_head_, &scalar_head_}) {
    for (const auto& l : *chain) {
      const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
      for (std::size_t k = 0; k < l.out * l.in; ++k) {
        params_[static_cast<Eigen::Index>(l.offset + k)] = rng.uniform(-limit, limit);
      }
    }
  }
}

namespace {

// tanh through the packet exp; Eigen's double tanh is scalar.
template <typename Derived>
void activate(Eigen::MatrixBase<Derived>& z) {
  z = (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

// acts[0] is the chain input; acts[k] the output of layer k-1.
template <typename WeightsFn, typename BiasFn>
void run_chain(const auto& layers, const Eigen::MatrixXd& input, std::vector<Eigen::MatrixXd>& acts, WeightsFn&& w,
               BiasFn&& b) {
  acts.resize(layers.size() + 1);
  acts[0] = input;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Eigen::MatrixXd z = w(layers[k]) * acts[k];
    z.colwise() += b(layers[k]);
    if (layers[k].tanh) activate(z);
    acts[k + 1] = std::move(z);
  }
}

}  // namespace

Network::Output Network::forward(const Eigen::MatrixXd& x) const {
  auto w = [this](const Layer& l) { return weights(l); };
  auto b = [this](const Layer& l) { return bias(l); };
  std::vector<Eigen::MatrixXd> trunk_acts, flux_acts, scalar_acts;
  run_chain(trunk_, x, trunk_acts, w, b);
  run_chain(flux_head_, trunk_acts.back(), flux_acts, w, b);
  run_chain(scalar_head_, trunk_acts.back(), scalar_acts, w, b);
  return {std::move(flux_acts.back()), std::move(scalar_acts.back())};
}

void Network::forward_one(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const {
  // Per-thread scratch so the hot single-design path does not allocate.
  thread_local std::vector<double> scratch;
  std::size_t width = arch_.inputs;
  for (const auto* chain : {&trunk_, &flux_head_, &scalar_head_}) {
    for (const auto& l : *chain) width = std::max(width, l.out);
  }
  if (scratch.size() < 3 * width) scratch.resize(3 * width);
  double* trunk_out = scratch.data();
  double* ping = trunk_out + width;
  double* pong = ping + width;

  auto run = [&](const std::vector<Layer>& layers, const double* input, std::size_t n_in) -> const double* {
    const double* a = input;
    for (const auto& l : layers) {
      double* dst = a == ping ? pong : ping;
      Eigen::Map<Eigen::VectorXd> z(dst, static_cast<Eigen::Index>(l.out));
      z = bias(l);
      z.noalias() += weights(l) * Eigen::Map<const Eigen::VectorXd>(a, static_cast<Eigen::Index>(n_in));
      if (l.tanh) activate(z);
      a = dst;
      n_in = l.out;
    }
    return a;
  };

  std::copy(x.data(), x.data() + x.size(), trunk_out);
  const std::size_t trunk_width = trunk_.empty() ? arch_.inputs : trunk_.back().out;
  const double* h = run(trunk_, trunk_out, arch_.inputs);
  if (h != trunk_out) std::copy(h, h + trunk_width, trunk_out);
  const auto n_flux = static_cast<Eigen::Index>(arch_.flux_outputs);
  const auto n_scalar = static_cast<Eigen::Index>(arch_.scalar_outputs);
  out.head(n_flux) = Eigen::Map<const Eigen::VectorXd>(run(flux_head_, trunk_out, trunk_width), n_flux);
  out.segment(n_flux, n_scalar) =
      Eigen::Map<const Eigen::VectorXd>(run(scalar_head_, trunk_out, trunk_width), n_scalar);
}

double Network::loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_flux, const Eigen::MatrixXd& y_scalar) const {
  const auto out = forward(x);
  return 0.5 * (out.flux - y_flux).squaredNorm() / static_cast<double>(y_flux.size()) +
         0.5 * (out.scalars - y_scalar).squaredNorm() / static_cast<double>(y_scalar.size());
}

double Network::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y_flux,
                                  const Eigen::MatrixXd& y_scalar, Eigen::VectorXd& grad) const {
  auto w = [this](const Layer& l) { return weights(l); };
  auto b = [this](const Layer& l) { return bias(l); };
  std::vector<Eigen::MatrixXd> trunk_acts, flux_acts, scalar_acts;
  run_chain(trunk_, x, trunk_acts, w, b);
  run_chain(flux_head_, trunk_acts.back(), flux_acts, w, b);
  run_chain(scalar_head_, trunk_acts.back(), scalar_acts, w, b);

  const Eigen::MatrixXd flux_err = flux_acts.back() - y_flux;
  const Eigen::MatrixXd scalar_err = scalar_acts.back() - y_scalar;
  const double n_flux = static_cast<double>(y_flux.size());
  const double n_scalar = static_cast<double>(y_scalar.size());
  const double value = 0.5 * flux_err.squaredNorm() / n_flux + 0.5 * scalar_err.squaredNorm() / n_scalar;

  grad = Eigen::VectorXd::Zero(params_.size());

  // Backpropagates `delta` (gradient w.r.t. the last layer's pre-activation)
  // through a chain; returns the gradient w.r.t. the chain input.
  auto backprop = [&](const std::vector<Layer>& layers, const std::vector<Eigen::MatrixXd>& acts,
                      Eigen::MatrixXd delta) {
    Eigen::MatrixXd upstream;
    for (std::size_t k = layers.size(); k-- > 0;) {
      const auto& l = layers[k];
      Eigen::Map<Eigen::MatrixXd> gw(grad.data() + l.offset, static_cast<Eigen::Index>(l.out),
                                     static_cast<Eigen::Index>(l.in));
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + l.offset + l.out * l.in, static_cast<Eigen::Index>(l.out));
      gw.noalias() += delta * acts[k].transpose();
      gb += delta.rowwise().sum();
      upstream = weights(l).transpose() * delta;
      if (k > 0) {
        delta = layers[k - 1].tanh ? Eigen::MatrixXd(upstream.array() * (1.0 - acts[k].array().square()))
                                   : upstream;
      }
    }
    return upstream;
  };

  Eigen::MatrixXd g_trunk_out = backprop(flux_head_, flux_acts, flux_err / n_flux);
  g_trunk_out += backprop(scalar_head_, scalar_acts, scalar_err / n_scalar);
  if (!trunk_.empty()) {
    Eigen::MatrixXd delta = g_trunk_out.array() * (1.0 - trunk_acts.back().array().square());
    backprop(trunk_, trunk_acts, std::move(delta));
  }
  return value;
}

// ===========================================================================
// Scaling

Scaler Scaler::fit(const DesignSpec& spec, std::span<const DatasetRecord> train) {
  Scaler s;
  for (const auto& p : spec.params) {
    s.in_lower.push_back(p.lower);
    s.in_range.push_back(p.upper - p.lower);
  }
  const std::size_t n_out = IntermediateMeasures::kFlatSize;
  s.out_mean.assign(n_out, 0.0);
  s.out_std.assign(n_out, kStdFloor);
  if (train.empty()) return s;

  const double n = static_cast<double>(train.size());
  std::vector<std::array<double, IntermediateMeasures::kFlatSize>> flat;
  flat.reserve(train.size());
  for (const auto& r : train) flat.push_back(r.measures.flatten());
  for (std::size_t j = 0; j < n_out; ++j) {
    double mean = 0.0;
    for (const auto& y : flat) mean += y[j];
    mean /= n;
    double var = 0.0;
    for (const auto& y : flat) var += (y[j] - mean) * (y[j] - mean);
    s.out_mean[j] = mean;
    s.out_std[j] = std::max(std::sqrt(var / n), kStdFloor);
  }
  return s;
}

Eigen::VectorXd Scaler::transform_input(std::span<const double> x) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) z[static_cast<Eigen::Index>(i)] = (x[i] - in_lower[i]) / in_range[i];
  return z;
}

Eigen::VectorXd Scaler::transform_output(std::span<const double> y) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(y.size()));
  for (std::size_t j = 0; j < y.size(); ++j) z[static_cast<Eigen::Index>(j)] = (y[j] - out_mean[j]) / out_std[j];
  return z;
}

std::vector<double> Scaler::inverse_output(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  std::vector<double> y(static_cast<std::size_t>(z.size()));
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = z[static_cast<Eigen::Index>(j)] * out_std[j] + out_mean[j];
  return y;
}

// ===========================================================================
// Training

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("training.max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("training.validation_fraction must be in [0, 1)");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("training.learning_rate must be > 0");
}

namespace {

struct Matrices {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y_flux;
  Eigen::MatrixXd y_scalar;
};

Matrices to_matrices(const Scaler& scaler, std::span<const DatasetRecord> records) {
  const auto n = static_cast<Eigen::Index>(records.size());
  constexpr auto kFlux = static_cast<Eigen::Index>(IntermediateMeasures::kFluxOutputs);
  constexpr auto kScalar = static_cast<Eigen::Index>(IntermediateMeasures::kScalarOutputs);
  Matrices m{Eigen::MatrixXd(static_cast<Eigen::Index>(kNumParams), n), Eigen::MatrixXd(kFlux, n),
             Eigen::MatrixXd(kScalar, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    m.x.col(i) = scaler.transform_input(r.design.span());
    const auto flat = r.measures.flatten();
    const Eigen::VectorXd z = scaler.transform_output(flat);
    m.y_flux.col(i) = z.head(kFlux);
    m.y_scalar.col(i) = z.tail(kScalar);
  }
  return m;
}

Matrices gather(const Matrices& all, std::span<const std::size_t> idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Matrices m{Eigen::MatrixXd(all.x.rows(), n), Eigen::MatrixXd(all.y_flux.rows(), n),
             Eigen::MatrixXd(all.y_scalar.rows(), n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]);
    m.x.col(i) = all.x.col(c);
    m.y_flux.col(i) = all.y_flux.col(c);
    m.y_scalar.col(i) = all.y_scalar.col(c);
  }
  return m;
}

}  // namespace

MetaModel train(const Dataset& ds, const TrainConfig& cfg, const DesignSpec& spec) {
  cfg.validate();

  std::vector<DatasetRecord> pool;
  std::vector<DatasetRecord> validation;
  for (const auto& r : ds.records) {
    if (r.split == Split::validation) validation.push_back(r);
    if (r.split == Split::train) pool.push_back(r);
  }
  std::vector<DatasetRecord> training;
  if (!validation.empty() || cfg.validation_fraction == 0.0) {
    training = std::move(pool);
  } else {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, stream::kSplit, 1));
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(pool.size()))));
    for (std::size_t k = 0; k < order.size(); ++k) {
      (k < n_val ? validation : training).push_back(pool[order[k]]);
    }
  }
  if (training.size() < 10) {
    throw TooFewSamples("training needs at least 10 records, got " + std::to_string(training.size()));
  }

  MetaModel model{Network(cfg.architecture), Scaler::fit(spec, training), {}};
  model.network.initialize(cfg.seed);

  const auto train_m = to_matrices(model.scaler, training);
  const auto val_m = to_matrices(model.scaler, validation);
  const bool has_val = !validation.empty();

  auto& params = model.network.parameters();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd grad;
  Eigen::VectorXd best = params;
  double best_val = HUGE_VAL;
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  auto& meta = model.metadata;
  meta.seed = cfg.seed;
  meta.spec_hash = design_spec_hash(spec);
  meta.train_samples = training.size();
  meta.validation_samples = validation.size();

  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, stream::kShuffle, epoch));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto len = std::min(cfg.batch_size, order.size() - start);
      const auto batch = gather(train_m, std::span<const std::size_t>(order).subspan(start, len));
      model.network.loss_and_gradient(batch.x, batch.y_flux, batch.y_scalar, grad);
      beta1_t *= cfg.beta1;
      beta2_t *= cfg.beta2;
      m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
      m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
      params.array() -= cfg.learning_rate * (m1.array() / (1.0 - beta1_t)) /
                        ((m2.array() / (1.0 - beta2_t)).sqrt() + cfg.epsilon);
    }

    meta.train_history.push_back(model.network.loss(train_m.x, train_m.y_flux, train_m.y_scalar));
    meta.epochs_run = epoch + 1;
    if (has_val) {
      const double val = model.network.loss(val_m.x, val_m.y_flux, val_m.y_scalar);
      meta.validation_history.push_back(val);
      if (val < best_val) {
        best_val = val;
        best = params;
        meta.best_epoch = epoch;
      } else if (cfg.patience > 0 && epoch - meta.best_epoch >= cfg.patience) {
        break;
      }
    } else {
      meta.best_epoch = epoch;
    }
  }

  if (has_val) params = best;
  meta.train_loss = model.network.loss(train_m.x, train_m.y_flux, train_m.y_scalar);
  meta.validation_loss = has_val ? best_val : 0.0;
  if (!params.allFinite()) throw InvariantError("training produced non-finite weights");
  return model;
}

IntermediateMeasures MetaModel::predict(const DesignVector& v) const {
  std::array<double, kNumParams> x{};
  for (std::size_t i = 0; i < kNumParams; ++i) x[i] = (v.values[i] - scaler.in_lower[i]) / scaler.in_range[i];
  std::array<double, IntermediateMeasures::kFlatSize> y{};
  Eigen::Map<Eigen::VectorXd> z(y.data(), static_cast<Eigen::Index>(y.size()));
  network.forward_one(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())), z);
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = y[j] * scaler.out_std[j] + scaler.out_mean[j];
  auto m = IntermediateMeasures::unflatten(y);

  m.c_hy = std::max(m.c_hy, 0.0);
  m.c_ed = std::max(m.c_ed, 0.0);
  m.psi_ref = std::max(m.psi_ref, 1e-6);
  for (int iu = 0; iu < kGridPoints; ++iu) m.psi_q.at(0, iu) = 0.0;
  return m;
}

IntermediateMeasures predict(const MetaModel& model, const DesignVector& v) { return model.predict(v); }

// ===========================================================================
// Metrics

FitMetrics fit_metrics(std::span<const double> reference, std::span<const double> predicted, double mape_floor) {
  FitMetrics f;
  if (reference.empty()) return f;
  const double n = static_cast<double>(reference.size());
  const double mean = std::accumulate(reference.begin(), reference.end(), 0.0) / n;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double ape = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ss_res += (reference[i] - predicted[i]) * (reference[i] - predicted[i]);
    ss_tot += (reference[i] - mean) * (reference[i] - mean);
    if (std::abs(reference[i]) > mape_floor) {
      ape += std::abs((predicted[i] - reference[i]) / reference[i]);
      ++counted;
    }
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  f.mape = counted > 0 ? 100.0 * ape / static_cast<double>(counted) : 0.0;
  return f;
}

double ModelMetrics::scalar_group_r2() const {
  return std::min({scalars[0].r2, scalars[1].r2, scalars[2].r2});
}

ModelMetrics evaluate_model(const MetaModel& model, std::span<const DatasetRecord> records) {
  ModelMetrics mm;
  mm.samples = records.size();
  if (records.empty()) return mm;

  constexpr std::size_t kFlux = IntermediateMeasures::kFluxOutputs;
  const std::size_t n = records.size();
  std::vector<std::array<double, IntermediateMeasures::kFlatSize>> ref(n), pred(n);
  std::vector<double> p_ref(n), p_pred(n), c_ref(n), c_pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    const auto predicted = model.predict(r.design);
    ref[i] = r.measures.flatten();
    pred[i] = predicted.flatten();
    const auto k_ref = evaluate_kpis(r.design, r.measures);
    const auto k_pred = evaluate_kpis(r.design, predicted);
    p_ref[i] = -k_ref.kpis.neg_max_power;
    p_pred[i] = -k_pred.kpis.neg_max_power;
    c_ref[i] = k_ref.kpis.cost;
    c_pred[i] = k_pred.kpis.cost;
  }

  // Flux maps pooled: residuals against each output's own mean.
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double ape = 0.0;
  std::size_t counted = 0;
  constexpr double kFluxMapeFloor = 1e-6;
  for (std::size_t j = 0; j < kFlux; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ref[i][j];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      ss_res += (ref[i][j] - pred[i][j]) * (ref[i][j] - pred[i][j]);
      ss_tot += (ref[i][j] - mean) * (ref[i][j] - mean);
      if (std::abs(ref[i][j]) > kFluxMapeFloor) {
        ape += std::abs((pred[i][j] - ref[i][j]) / ref[i][j]);
        ++counted;
      }
    }
  }
  mm.flux.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  mm.flux.mape = counted > 0 ? 100.0 * ape / static_cast<double>(counted) : 0.0;

  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = ref[i][kFlux + s];
      b[i] = pred[i][kFlux + s];
    }
    mm.scalars[s] = fit_metrics(a, b);
  }
  mm.max_power = fit_metrics(p_ref, p_pred);
  mm.cost = fit_metrics(c_ref, c_pred);
  return mm;
}

// ===========================================================================
// Persistence
//
// Little-endian binary container; see docs/model_format.md.

namespace {

constexpr char kMagic[8] = {'P', 'M', 'S', 'M', 'S', 'U', 'R', 'R'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    bytes_.append(buf, sizeof(T));
  }
  void put_doubles(std::span<const double> values) {
    put<std::uint64_t>(values.size());
    for (double v : values) put(v);
  }
  void put_string(std::string_view s) {
    put<std::uint64_t>(s.size());
    bytes_.append(s);
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
  }
  std::vector<double> get_doubles(std::size_t expected) {
    const auto n = get<std::uint64_t>();
    if (n != expected) {
      throw FormatError("model file shape mismatch: expected " + std::to_string(expected) + " values, found " +
                        std::to_string(n));
    }
    std::vector<double> out(n);
    for (auto& v : out) v = get<double>();
    return out;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("model file truncated (shape mismatch)");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const MetaModel& model) {
  Writer w;
  w.bytes().append(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kModelFormatVersion);

  const auto& arch = model.network.architecture();
  w.put<std::uint64_t>(arch.inputs);
  w.put<std::uint64_t>(arch.trunk.size());
  for (auto h : arch.trunk) w.put<std::uint64_t>(h);
  w.put<std::uint64_t>(arch.head_hidden);
  w.put<std::uint64_t>(arch.flux_outputs);
  w.put<std::uint64_t>(arch.scalar_outputs);

  const auto& p = model.network.parameters();
  w.put_doubles(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  w.put_doubles(model.scaler.in_lower);
  w.put_doubles(model.scaler.in_range);
  w.put_doubles(model.scaler.out_mean);
  w.put_doubles(model.scaler.out_std);

  const auto& m = model.metadata;
  w.put<std::uint64_t>(m.seed);
  w.put<std::uint64_t>(m.epochs_run);
  w.put<std::uint64_t>(m.best_epoch);
  w.put<std::uint64_t>(m.train_samples);
  w.put<std::uint64_t>(m.validation_samples);
  w.put<double>(m.train_loss);
  w.put<double>(m.validation_loss);
  w.put_string(m.spec_hash);
  w.put_doubles(m.train_history);
  w.put_doubles(m.validation_history);

  w.put<std::uint64_t>(fnv1a64(w.bytes()));
  return std::move(w.bytes());
}

MetaModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a surrogate model file (bad magic)");
  }
  Reader r(bytes.substr(sizeof(kMagic)));
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw VersionError("model format version " + std::to_string(version) + " unsupported (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  }

  Architecture arch;
  arch.inputs = r.get<std::uint64_t>();
  const auto n_trunk = r.get<std::uint64_t>();
  if (n_trunk > 64) throw FormatError("model file shape mismatch: implausible trunk depth");
  arch.trunk.resize(n_trunk);
  for (auto& h : arch.trunk) h = r.get<std::uint64_t>();
  arch.head_hidden = r.get<std::uint64_t>();
  arch.flux_outputs = r.get<std::uint64_t>();
  arch.scalar_outputs = r.get<std::uint64_t>();
  if (arch.inputs != kNumParams || arch.flux_outputs != IntermediateMeasures::kFluxOutputs ||
      arch.scalar_outputs != IntermediateMeasures::kScalarOutputs) {
    throw FormatError("model file shape mismatch: network does not map 14 inputs to 165 outputs");
  }
  for (auto h : arch.trunk) {
    if (h == 0 || h > 1u << 16) throw FormatError("model file shape mismatch: bad layer width");
  }
  if (arch.head_hidden == 0 || arch.head_hidden > 1u << 16) {
    throw FormatError("model file shape mismatch: bad head width");
  }

  MetaModel model{Network(arch), {}, {}};
  const auto params = r.get_doubles(model.network.num_parameters());
  model.network.parameters() = Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
  model.scaler.in_lower = r.get_doubles(kNumParams);
  model.scaler.in_range = r.get_doubles(kNumParams);
  model.scaler.out_mean = r.get_doubles(IntermediateMeasures::kFlatSize);
  model.scaler.out_std = r.get_doubles(IntermediateMeasures::kFlatSize);

  auto& m = model.metadata;
  m.seed = r.get<std::uint64_t>();
  m.epochs_run = r.get<std::uint64_t>();
  m.best_epoch = r.get<std::uint64_t>();
  m.train_samples = r.get<std::uint64_t>();
  m.validation_samples = r.get<std::uint64_t>();
  m.train_loss = r.get<double>();
  m.validation_loss = r.get<double>();
  m.spec_hash = r.get_string();
  m.train_history = r.get_doubles(m.epochs_run);
  m.validation_history = r.get_doubles(m.validation_samples > 0 ? m.epochs_run : 0);

  const std::size_t body = sizeof(kMagic) + r.position();
  const auto checksum = r.get<std::uint64_t>();
  if (checksum != fnv1a64(bytes.substr(0, body))) throw FormatError("model file checksum mismatch");
  if (r.remaining() != 0) throw FormatError("model file has trailing bytes");
  if (!model.network.parameters().allFinite()) throw FormatError("model file holds non-finite weights");
  return model;
}

void save(const MetaModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

MetaModel load(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace pmsmopt
