#include "pmsmopt/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "pmsmopt/errors.hpp"
#include "pmsmopt/io.hpp"
#include "pmsmopt/random.hpp"

namespace pmsmopt {

using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path sidecar(const fs::path& p) { return fs::path(p.string() + ".meta.json"); }

json read_json(const fs::path& p) {
  const auto text = read_file(p);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Config parsing

void check_keys(const json& obj, std::string_view block, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(block) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + std::string(block) + "." + key + "'");
    }
  }
}

void read_double(const json& obj, const char* key, double& out) {
  if (!obj.contains(key)) return;
  if (!obj[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
  out = obj[key].get<double>();
}

void read_size(const json& obj, const char* key, std::size_t& out) {
  if (!obj.contains(key)) return;
  if (!obj[key].is_number_unsigned()) throw ConfigError(std::string(key) + " must be a non-negative integer");
  out = obj[key].get<std::size_t>();
}

void read_seed(const json& obj, std::string_view block, std::uint64_t& out) {
  if (!obj.contains("seed")) throw ConfigError(std::string(block) + ".seed is mandatory");
  if (!obj["seed"].is_number_unsigned()) throw ConfigError(std::string(block) + ".seed must be a non-negative integer");
  out = obj["seed"].get<std::uint64_t>();
}

void read_path(const json& obj, const char* key, fs::path& out) {
  if (!obj.contains(key)) return;
  if (!obj[key].is_string()) throw ConfigError(std::string("paths.") + key + " must be a string");
  out = obj[key].get<std::string>();
}

void parse_design_spec(const json& j, DesignSpec& spec) {
  check_keys(j, "design_spec", {"bounds", "geometry_limits"});
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    if (!b.is_object()) throw ConfigError("design_spec.bounds must be an object");
    for (const auto& [name, range] : b.items()) {
      const auto idx = spec.index_of(name);
      if (idx == kNumParams) throw ConfigError("unknown design parameter '" + name + "'");
      if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
        throw ConfigError("design_spec.bounds." + name + " must be [lower, upper]");
      }
      spec.params[idx].lower = range[0].get<double>();
      spec.params[idx].upper = range[1].get<double>();
    }
  }
  if (j.contains("geometry_limits")) {
    const auto& g = j["geometry_limits"];
    check_keys(g, "design_spec.geometry_limits",
               {"bridge_min", "web_width", "iron_min", "slot_opening_min", "outer_radius_max"});
    read_double(g, "bridge_min", spec.limits.bridge_min);
    read_double(g, "web_width", spec.limits.web_width);
    read_double(g, "iron_min", spec.limits.iron_min);
    read_double(g, "slot_opening_min", spec.limits.slot_opening_min);
    read_double(g, "outer_radius_max", spec.limits.outer_radius_max);
  }
}

json design_spec_json(const DesignSpec& spec) {
  json bounds = json::object();
  for (const auto& p : spec.params) bounds[p.name] = {p.lower, p.upper};
  const auto& l = spec.limits;
  return {{"bounds", bounds},
          {"geometry_limits",
           {{"bridge_min", l.bridge_min},
            {"web_width", l.web_width},
            {"iron_min", l.iron_min},
            {"slot_opening_min", l.slot_opening_min},
            {"outer_radius_max", l.outer_radius_max}}}};
}

json training_json(const CampaignConfig& c) {
  const auto& t = c.training;
  return {{"seed", t.seed},
          {"max_epochs", t.max_epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"epsilon", t.epsilon},
          {"validation_fraction", t.validation_fraction},
          {"patience", t.patience},
          {"test_count", c.test_count}};
}

json optimizer_json(const OptimizerConfig& o) {
  return {{"seed", o.seed},
          {"population_size", o.population_size},
          {"max_generations", o.max_generations},
          {"crossover_probability", o.crossover_probability},
          {"eta_c", o.eta_c},
          {"mutation_probability", o.mutation_probability},
          {"eta_m", o.eta_m},
          {"integer_reset_probability", o.integer_reset_probability},
          {"convergence_window", o.convergence_window},
          {"convergence_threshold", o.convergence_threshold},
          {"budget_multiplier", o.budget_multiplier}};
}

// ---------------------------------------------------------------------------
// Artifact metadata

json artifact_meta(const CampaignConfig& cfg) {
  return {{"tool_version", std::string(kToolVersion)},
          {"config_hash", config_hash(cfg)},
          {"spec_hash", design_spec_hash(cfg.spec)}};
}

std::string content_hash(std::string_view body) { return hex64(fnv1a64(body)); }

void verify_content(const fs::path& path, std::string_view body, const json& meta, const char* key) {
  if (!meta.contains(key) || !meta[key].is_string()) throw FormatError(path.string() + ": sidecar lacks " + key);
  if (meta[key].get<std::string>() != content_hash(body)) {
    throw IntegrityError(path.string() + ": content hash does not match its metadata");
  }
}

void verify_spec(const fs::path& path, const json& meta, const DesignSpec& spec) {
  const auto expected = design_spec_hash(spec);
  const auto found = meta.value("spec_hash", std::string{});
  if (found != expected) {
    throw IntegrityError(path.string() + ": spec hash " + found + " does not match configured spec " + expected);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void CampaignConfig::validate() const {
  spec.validate();
  training.validate();
  optimizer.validate();
  if (sampling.n_lhs == 0) throw ConfigError("sampling.n_lhs must be positive");
  if (test_count >= sampling.n_lhs) throw ConfigError("training.test_count must be below sampling.n_lhs");
}

CampaignConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"design_spec", "sampling", "training", "optimizer", "paths"});

  CampaignConfig c;
  try {
    if (j.contains("design_spec")) parse_design_spec(j["design_spec"], c.spec);

    const json sampling = j.value("sampling", json::object());
    check_keys(sampling, "sampling", {"n_lhs", "seed", "max_resample_rounds"});
    read_seed(sampling, "sampling", c.sampling.seed);
    read_size(sampling, "n_lhs", c.sampling.n_lhs);
    read_size(sampling, "max_resample_rounds", c.sampling.max_resample_rounds);

    const json training = j.value("training", json::object());
    check_keys(training, "training",
               {"seed", "max_epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon",
                "validation_fraction", "patience", "test_count"});
    auto& t = c.training;
    read_seed(training, "training", t.seed);
    read_size(training, "max_epochs", t.max_epochs);
    read_size(training, "batch_size", t.batch_size);
    read_double(training, "learning_rate", t.learning_rate);
    read_double(training, "beta1", t.beta1);
    read_double(training, "beta2", t.beta2);
    read_double(training, "epsilon", t.epsilon);
    read_double(training, "validation_fraction", t.validation_fraction);
    read_size(training, "patience", t.patience);
    read_size(training, "test_count", c.test_count);

    const json optimizer = j.value("optimizer", json::object());
    check_keys(optimizer, "optimizer",
               {"seed", "population_size", "max_generations", "crossover_probability", "eta_c",
                "mutation_probability", "eta_m", "integer_reset_probability", "convergence_window",
                "convergence_threshold", "threads"});
    auto& o = c.optimizer;
    read_seed(optimizer, "optimizer", o.seed);
    read_size(optimizer, "population_size", o.population_size);
    read_size(optimizer, "max_generations", o.max_generations);
    read_double(optimizer, "crossover_probability", o.crossover_probability);
    read_double(optimizer, "eta_c", o.eta_c);
    read_double(optimizer, "mutation_probability", o.mutation_probability);
    read_double(optimizer, "eta_m", o.eta_m);
    read_double(optimizer, "integer_reset_probability", o.integer_reset_probability);
    read_size(optimizer, "convergence_window", o.convergence_window);
    read_double(optimizer, "convergence_threshold", o.convergence_threshold);
    read_size(optimizer, "threads", o.threads);

    if (j.contains("paths")) {
      const auto& p = j["paths"];
      check_keys(p, "paths", {"dataset", "model", "results"});
      read_path(p, "dataset", c.paths.dataset);
      read_path(p, "model", c.paths.model);
      read_path(p, "results", c.paths.results);
    }
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

CampaignConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

std::string canonical_config(const CampaignConfig& cfg) {
  json j = {{"design_spec", design_spec_json(cfg.spec)},
            {"sampling",
             {{"n_lhs", cfg.sampling.n_lhs},
              {"seed", cfg.sampling.seed},
              {"max_resample_rounds", cfg.sampling.max_resample_rounds}}},
            {"training", training_json(cfg)},
            {"optimizer", optimizer_json(cfg.optimizer)},
            {"kpi_hash", kpi_definition_hash()}};
  return j.dump();
}

std::string config_hash(const CampaignConfig& cfg) { return hex64(fnv1a64(canonical_config(cfg))); }

// ---------------------------------------------------------------------------
// Dataset

std::vector<std::string> dataset_columns() {
  std::vector<std::string> cols;
  for (const auto& p : DesignSpec::defaults().params) cols.push_back(p.name);
  for (const char* grid : {"psi_d", "psi_q"}) {
    for (int iw = 0; iw < kGridPoints; ++iw) {
      for (int iu = 0; iu < kGridPoints; ++iu) {
        cols.push_back(std::string(grid) + "_w" + std::to_string(iw) + "_u" + std::to_string(iu));
      }
    }
  }
  cols.insert(cols.end(), {"c_hy", "c_ed", "psi_ref"});
  return cols;
}

std::string dataset_to_csv(const Dataset& ds) {
  std::string out;
  const auto cols = dataset_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
  out += '\n';
  for (const auto& r : ds.records) {
    for (std::size_t k = 0; k < kNumParams; ++k) out += (k ? "," : "") + format_double(r.design.values[k]);
    for (double y : r.measures.flatten()) out += "," + format_double(y);
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text) {
  const auto cols = dataset_columns();
  Dataset ds;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != cols.size()) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": expected " + std::to_string(cols.size()) +
                        " columns, got " + std::to_string(fields.size()));
    }
    if (line_no == 1) {
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (fields[k] != cols[k]) throw FormatError("dataset header column " + std::to_string(k) + " is not " + cols[k]);
      }
      continue;
    }
    DatasetRecord r;
    std::vector<double> values(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) values[k] = parse_double(fields[k]);
    std::copy_n(values.begin(), kNumParams, r.design.values.begin());
    r.measures = IntermediateMeasures::unflatten(std::span<const double>(values).subspan(kNumParams));
    ds.records.push_back(r);
  }
  if (line_no == 0) throw FormatError("dataset is empty");
  return ds;
}

DatasetReport cmd_dataset(const CampaignConfig& cfg) {
  const auto designs = lhs_feasible(cfg.sampling, cfg.spec);
  const auto ds = build_dataset(designs);
  const auto body = dataset_to_csv(ds);

  json meta = artifact_meta(cfg);
  meta["kind"] = "dataset";
  meta["seed"] = cfg.sampling.seed;
  meta["n_lhs"] = cfg.sampling.n_lhs;
  meta["rows"] = ds.size();
  meta["columns"] = dataset_columns().size();
  meta["content_hash"] = content_hash(body);

  write_file_atomic(cfg.paths.dataset, body);
  write_file_atomic(sidecar(cfg.paths.dataset), dump(meta));
  return {cfg.paths.dataset, ds.size(), design_spec_hash(cfg.spec)};
}

Dataset load_dataset(const fs::path& path, const DesignSpec& spec) {
  const auto body = read_file(path);
  const auto meta = read_json(sidecar(path));
  verify_spec(path, meta, spec);
  verify_content(path, body, meta, "content_hash");
  return dataset_from_csv(body);
}

// ---------------------------------------------------------------------------
// Training

namespace {

json fit_json(const FitMetrics& m) { return {{"r2", m.r2}, {"mape_percent", m.mape}}; }

json metrics_json(const ModelMetrics& m) {
  return {{"samples", m.samples},
          {"flux_group", fit_json(m.flux)},
          {"scalar_group", {{"r2", m.scalar_group_r2()},
                            {"c_hy", fit_json(m.scalars[0])},
                            {"c_ed", fit_json(m.scalars[1])},
                            {"psi_ref", fit_json(m.scalars[2])}}},
          {"max_power", fit_json(m.max_power)},
          {"cost", fit_json(m.cost)}};
}

}  // namespace

TrainReport cmd_train(const CampaignConfig& cfg) {
  auto ds = load_dataset(cfg.paths.dataset, cfg.spec);
  if (cfg.test_count >= ds.size()) {
    throw TooFewSamples("test_count " + std::to_string(cfg.test_count) + " leaves no training records out of " +
                        std::to_string(ds.size()));
  }
  tag_test_split(ds, cfg.test_count, derive_seed(cfg.training.seed, stream::kSplit, 0));

  const auto t0 = Clock::now();
  const auto model = train(ds, cfg.training, cfg.spec);
  TrainReport rep;
  rep.seconds = seconds_since(t0);
  rep.metadata = model.metadata;
  const auto test = ds.subset(Split::test);
  if (!test.empty()) rep.test = evaluate_model(model, test);

  const auto bytes = serialize_model(model);
  json meta = artifact_meta(cfg);
  meta["kind"] = "model";
  meta["format_version"] = kModelFormatVersion;
  meta["content_hash"] = content_hash(bytes);
  write_file_atomic(cfg.paths.model, bytes);
  write_file_atomic(sidecar(cfg.paths.model), dump(meta));

  const auto& md = model.metadata;
  json metrics = artifact_meta(cfg);
  metrics["kind"] = "training_metrics";
  metrics["training"] = {{"seed", md.seed},
                         {"epochs_run", md.epochs_run},
                         {"best_epoch", md.best_epoch},
                         {"train_samples", md.train_samples},
                         {"validation_samples", md.validation_samples},
                         {"train_loss", md.train_loss},
                         {"validation_loss", md.validation_loss}};
  metrics["test"] = metrics_json(rep.test);
  rep.metrics_path = fs::path(cfg.paths.model.string() + ".metrics.json");
  write_file_atomic(rep.metrics_path, dump(metrics));

  json timing = artifact_meta(cfg);
  timing["kind"] = "training_timing";
  timing["training_seconds"] = rep.seconds;
  write_file_atomic(fs::path(cfg.paths.model.string() + ".timing.json"), dump(timing));
  return rep;
}

MetaModel load_verified_model(const fs::path& path, const DesignSpec& spec) {
  if (!fs::exists(path)) throw IoError("model file " + path.string() + " does not exist");
  const auto bytes = read_file(path);
  const auto meta = read_json(sidecar(path));
  verify_spec(path, meta, spec);
  verify_content(path, bytes, meta, "content_hash");
  auto model = deserialize_model(bytes);
  if (model.metadata.spec_hash != design_spec_hash(spec)) {
    throw IntegrityError(path.string() + ": model was trained for a different design spec");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Optimization

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::classical: return "classical";
    case RunMode::hybrid: return "hybrid";
    case RunMode::factor2: return "factor2";
  }
  return "?";
}

RunMode run_mode_from_string(std::string_view s) {
  if (s == "classical") return RunMode::classical;
  if (s == "hybrid") return RunMode::hybrid;
  if (s == "factor2") return RunMode::factor2;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected classical, hybrid, factor2)");
}

std::string archive_to_csv(const ParetoArchive& archive) {
  std::string out = "id,generation,evaluator,physics_evaluated,feasible,violation";
  for (const auto& p : DesignSpec::defaults().params) out += "," + p.name;
  out += ",k1_neg_max_power,k2_cost";
  for (std::size_t k = 1; k <= kNumConstraints; ++k) out += ",c" + std::to_string(k);
  out += '\n';
  for (const auto& d : archive.designs()) {
    out += std::to_string(d.id) + "," + std::to_string(d.generation) + "," + std::string(to_string(d.evaluator)) +
           "," + (d.physics_evaluated ? "1" : "0") + "," + (d.feasible ? "1" : "0") + "," + format_double(d.violation);
    for (double x : d.x) out += "," + format_double(x);
    for (double k : d.objectives) out += "," + format_double(k);
    for (double c : d.constraints) out += "," + format_double(c);
    out += '\n';
  }
  return out;
}

std::string history_to_csv(const std::vector<GenerationStats>& history) {
  std::string out = "generation,hypervolume,feasible_count,front_size,evaluations,archive_size\n";
  for (const auto& s : history) {
    out += std::to_string(s.generation) + "," + format_double(s.hypervolume) + "," +
           std::to_string(s.feasible_count) + "," + std::to_string(s.front_size) + "," +
           std::to_string(s.evaluations) + "," + std::to_string(s.archive_size) + "\n";
  }
  return out;
}

namespace {

json meta_of_bundle(const fs::path& dir) { return read_json(dir / "meta.json"); }

std::vector<double> reference_of_bundle(const fs::path& dir) {
  const auto meta = meta_of_bundle(dir);
  if (meta.value("kpi_hash", std::string{}) != kpi_definition_hash()) {
    throw IntegrityError(dir.string() + ": bundle uses different KPI definitions");
  }
  return meta.at("reference_point").get<std::vector<double>>();
}

json front_entry_json(const EvaluatedDesign& d) {
  return {{"id", d.id},
          {"params", d.x},
          {"kpis", {{"max_power_w", -d.objectives[0]}, {"cost", d.objectives[1]}}},
          {"constraints", d.constraints},
          {"feasible", d.feasible},
          {"evaluator", std::string(to_string(d.evaluator))}};
}

}  // namespace

OptimizeReport cmd_optimize(const CampaignConfig& cfg, const OptimizeOptions& opts) {
  OptimizerConfig oc = cfg.optimizer;
  oc.budget_multiplier = opts.mode == RunMode::factor2 ? 2 : 1;
  if (opts.paired) {
    if (opts.mode != RunMode::factor2) throw ConfigError("--paired applies to factor2 runs only");
    const auto meta = meta_of_bundle(*opts.paired);
    if (meta.value("config_hash", std::string{}) != config_hash(cfg)) {
      throw IntegrityError(opts.paired->string() + ": paired bundle was produced with a different config");
    }
    oc.max_generations = meta.at("generations_executed").get<std::size_t>();
    oc.convergence_threshold = 0.0;
  }
  if (opts.reference_from) oc.reference_point = reference_of_bundle(*opts.reference_from);

  MeasureSource source = evaluate_measures;
  EvaluatorTag tag = EvaluatorTag::reference;
  std::string model_hash;
  if (opts.mode != RunMode::classical) {
    auto model = std::make_shared<const MetaModel>(load_verified_model(cfg.paths.model, cfg.spec));
    model_hash = content_hash(read_file(cfg.paths.model));
    source = [model](const DesignVector& v) { return model->predict(v); };
    tag = EvaluatorTag::surrogate;
  }
  const auto problem = make_pmsm_problem(cfg.spec, source, tag, cfg.sampling.max_resample_rounds);

  const auto t0 = Clock::now();
  OptimizeReport rep;
  rep.result = run(oc, problem);
  const double wall = seconds_since(t0);
  const auto& res = rep.result;
  rep.dir = opts.out_dir ? *opts.out_dir : cfg.paths.results / std::string(to_string(opts.mode));
  rep.hypervolume = res.reference_point.empty() ? 0.0
                                                : hypervolume_2d(res.archive.front_objectives(), res.reference_point);

  const auto archive_csv = archive_to_csv(res.archive);
  const auto history_csv = history_to_csv(res.history);

  json front = artifact_meta(cfg);
  front["kind"] = "front";
  front["mode"] = std::string(to_string(opts.mode));
  front["kpi_hash"] = kpi_definition_hash();
  front["reference_point"] = res.reference_point;
  front["front"] = json::array();
  for (const auto& d : res.front) front["front"].push_back(front_entry_json(d));
  const auto front_text = dump(front);

  json meta = artifact_meta(cfg);
  meta["kind"] = "optimization_bundle";
  meta["mode"] = std::string(to_string(opts.mode));
  meta["evaluator"] = std::string(to_string(tag));
  meta["kpi_hash"] = kpi_definition_hash();
  meta["model_hash"] = model_hash;
  meta["seed"] = oc.seed;
  meta["population_size"] = oc.population_size;
  meta["max_generations"] = oc.max_generations;
  meta["budget_multiplier"] = oc.budget_multiplier;
  meta["effective_max_generations"] = oc.effective_max_generations();
  meta["convergence_threshold"] = oc.convergence_threshold;
  meta["generations_executed"] = res.generations_executed;
  meta["evaluations"] = res.evaluations;
  meta["converged"] = res.converged;
  meta["reference_point"] = res.reference_point;
  meta["hypervolume"] = rep.hypervolume;
  meta["front_size"] = res.front.size();
  meta["archive_size"] = res.archive.size();
  meta["failure"] = res.failure ? json(*res.failure) : json(nullptr);
  meta["files"] = {{"archive.csv", content_hash(archive_csv)},
                   {"history.csv", content_hash(history_csv)},
                   {"front.json", content_hash(front_text)}};

  const auto& t = res.timing;
  const double n = static_cast<double>(std::max<std::size_t>(t.physics_evaluations, 1));
  json timing = artifact_meta(cfg);
  timing["kind"] = "optimization_timing";
  timing["mode"] = std::string(to_string(opts.mode));
  timing["evaluations"] = t.evaluations;
  timing["physics_evaluations"] = t.physics_evaluations;
  timing["measure_seconds"] = t.measure_seconds;
  timing["postprocess_seconds"] = t.postprocess_seconds;
  timing["evaluation_seconds"] = t.measure_seconds + t.postprocess_seconds;
  timing["evaluation_wall_seconds"] = t.evaluation_wall_seconds;
  timing["measure_seconds_per_evaluation"] = t.measure_seconds / n;
  timing["seconds_per_evaluation"] = (t.measure_seconds + t.postprocess_seconds) / n;
  timing["run_wall_seconds"] = wall;

  write_file_atomic(rep.dir / "archive.csv", archive_csv);
  write_file_atomic(rep.dir / "history.csv", history_csv);
  write_file_atomic(rep.dir / "front.json", front_text);
  write_file_atomic(rep.dir / "timing.json", dump(timing));
  write_file_atomic(rep.dir / "meta.json", dump(meta));
  if (res.failure) throw EvaluatorFailure("evaluation failed (partial archive written to " + rep.dir.string() + "): " + *res.failure);
  return rep;
}

Bundle load_bundle(const fs::path& dir) {
  const auto meta = meta_of_bundle(dir);
  const auto front_text = read_file(dir / "front.json");
  if (!meta.contains("files")) throw FormatError((dir / "meta.json").string() + " lacks file hashes");
  verify_content(dir / "front.json", front_text, meta["files"], "front.json");

  json front;
  try {
    front = json::parse(front_text);
  } catch (const json::exception& e) {
    throw FormatError((dir / "front.json").string() + ": " + e.what());
  }
  Bundle b;
  try {
    b.dir = dir;
    b.mode = meta.at("mode").get<std::string>();
    b.config_hash = meta.at("config_hash").get<std::string>();
    b.spec_hash = meta.at("spec_hash").get<std::string>();
    b.kpi_hash = meta.at("kpi_hash").get<std::string>();
    b.reference_point = meta.at("reference_point").get<std::vector<double>>();
    b.evaluations = meta.at("evaluations").get<std::size_t>();
    b.generations_executed = meta.at("generations_executed").get<std::size_t>();
    b.population_size = meta.at("population_size").get<std::size_t>();
    for (const auto& e : front.at("front")) {
      FrontEntry f;
      f.id = e.at("id").get<std::uint64_t>();
      f.params = e.at("params").get<std::vector<double>>();
      f.max_power_w = e.at("kpis").at("max_power_w").get<double>();
      f.cost = e.at("kpis").at("cost").get<double>();
      f.constraints = e.at("constraints").get<std::vector<double>>();
      f.feasible = e.at("feasible").get<bool>();
      f.evaluator = e.at("evaluator").get<std::string>();
      if (f.params.size() != kNumParams) throw FormatError("front entry has wrong parameter count");
      b.front.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw FormatError(dir.string() + ": malformed bundle: " + e.what());
  }
  return b;
}

// ---------------------------------------------------------------------------
// Comparison

CompareReport compare_fronts(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  CompareReport r;
  std::vector<std::vector<double>> both(a);
  both.insert(both.end(), b.begin(), b.end());
  if (both.empty()) throw InvariantError("cannot compare two empty fronts");
  r.reference_point = margin_reference_point(both);
  r.hv_a = hypervolume_2d(a, r.reference_point);
  r.hv_b = hypervolume_2d(b, r.reference_point);
  r.ratio = r.hv_a > 0.0 ? r.hv_b / r.hv_a : std::numeric_limits<double>::quiet_NaN();
  r.c_ab = coverage(a, b);
  r.c_ba = coverage(b, a);
  r.size_a = a.size();
  r.size_b = b.size();
  return r;
}

CompareReport cmd_compare(const fs::path& bundle_a, const fs::path& bundle_b, const fs::path& out) {
  const auto a = load_bundle(bundle_a);
  const auto b = load_bundle(bundle_b);
  if (a.kpi_hash != b.kpi_hash) throw IntegrityError("bundles were produced with different KPI definitions");
  if (a.spec_hash != b.spec_hash) throw IntegrityError("bundles were produced for different design specs");

  auto objectives = [](const Bundle& x) {
    std::vector<std::vector<double>> o;
    for (const auto& f : x.front) o.push_back(f.objectives());
    return o;
  };
  const auto rep = compare_fronts(objectives(a), objectives(b));

  json j = {{"tool_version", std::string(kToolVersion)},
            {"kind", "comparison"},
            {"a", {{"dir", bundle_a.string()}, {"mode", a.mode}, {"config_hash", a.config_hash},
                   {"front_size", rep.size_a}, {"hypervolume", rep.hv_a}, {"evaluations", a.evaluations}}},
            {"b", {{"dir", bundle_b.string()}, {"mode", b.mode}, {"config_hash", b.config_hash},
                   {"front_size", rep.size_b}, {"hypervolume", rep.hv_b}, {"evaluations", b.evaluations}}},
            {"config_hash", a.config_hash},
            {"kpi_hash", a.kpi_hash},
            {"reference_point", rep.reference_point},
            {"hypervolume_ratio_b_over_a", rep.ratio},
            {"coverage_a_over_b", rep.c_ab},
            {"coverage_b_over_a", rep.c_ba}};
  write_file_atomic(fs::path(out.string() + ".json"), dump(j));

  std::string csv = "front,k1_max_power_w,k2_cost\n";
  for (const auto* x : {&a, &b}) {
    for (const auto& f : x->front) csv += x->mode + "," + format_double(f.max_power_w) + "," + format_double(f.cost) + "\n";
  }
  write_file_atomic(fs::path(out.string() + "_plot.csv"), csv);
  return rep;
}

// ---------------------------------------------------------------------------
// Prediction plot

PredictPlotReport cmd_predict_plot(const CampaignConfig& cfg, const fs::path& bundle_dir, const fs::path& out,
                                   const MeasureSource& reference) {
  const auto b = load_bundle(bundle_dir);
  if (b.spec_hash != design_spec_hash(cfg.spec)) {
    throw IntegrityError(bundle_dir.string() + ": bundle was produced for a different design spec");
  }
  if (b.kpi_hash != kpi_definition_hash()) throw IntegrityError(bundle_dir.string() + ": different KPI definitions");

  std::vector<double> p_pred, p_ref, c_pred, c_ref;
  std::string csv = "id,max_power_predicted_w,max_power_reference_w,cost_predicted,cost_reference\n";
  for (const auto& f : b.front) {
    const auto v = DesignVector::from_span(f.params);
    const auto kpi = evaluate_kpis(v, reference(v), cfg.spec.limits);
    p_pred.push_back(f.max_power_w);
    p_ref.push_back(-kpi.kpis.neg_max_power);
    c_pred.push_back(f.cost);
    c_ref.push_back(kpi.kpis.cost);
    csv += std::to_string(f.id) + "," + format_double(p_pred.back()) + "," + format_double(p_ref.back()) + "," +
           format_double(c_pred.back()) + "," + format_double(c_ref.back()) + "\n";
  }

  PredictPlotReport rep;
  rep.rows = b.front.size();
  if (rep.rows > 0) {
    rep.max_power = fit_metrics(p_ref, p_pred);
    rep.cost = fit_metrics(c_ref, c_pred);
  }
  rep.csv_path = fs::path(out.string() + ".csv");
  write_file_atomic(rep.csv_path, csv);

  json j = {{"tool_version", std::string(kToolVersion)},
            {"kind", "prediction_plot"},
            {"config_hash", b.config_hash},
            {"bundle", bundle_dir.string()},
            {"rows", rep.rows},
            {"max_power", fit_json(rep.max_power)},
            {"cost", fit_json(rep.cost)}};
  write_file_atomic(fs::path(out.string() + ".json"), dump(j));
  return rep;
}

// ---------------------------------------------------------------------------
// Benchmarks

BenchmarkReport run_benchmark(std::string_view suite, const OptimizerConfig& cfg) {
  const auto bench = make_benchmark(suite);
  OptimizerConfig oc = cfg;
  oc.reference_point = bench.reference_point;

  const auto t0 = Clock::now();
  const auto res = run(oc, bench.problem);
  BenchmarkReport rep;
  rep.seconds = seconds_since(t0);
  rep.suite = bench.id;
  rep.analytic_hypervolume = bench.analytic_hypervolume;
  rep.generations = res.generations_executed;

  const auto front = res.archive.front_objectives();
  rep.front_size = front.size();
  rep.hypervolume = hypervolume_2d(front, bench.reference_point);
  if (!front.empty()) {
    rep.gd_mean = generational_distance(front, bench.true_front);
    for (const auto& p : front) {
      rep.gd_max = std::max(rep.gd_max, generational_distance(std::span(&p, 1), bench.true_front));
    }
  }
  if (bench.id == "constrained-demo") {
    rep.excluded_points = static_cast<std::size_t>(
        std::count_if(front.begin(), front.end(), [](const auto& p) { return p[0] > 0.2 && p[0] < 0.8; }));
  }
  return rep;
}

BenchmarkReport cmd_benchmark(std::string_view suite, const CampaignConfig& cfg, const OptimizerConfig& opt) {
  const auto rep = run_benchmark(suite, opt);
  json j = {{"tool_version", std::string(kToolVersion)},
            {"kind", "benchmark"},
            {"suite", rep.suite},
            {"optimizer", optimizer_json(opt)},
            {"hypervolume", rep.hypervolume},
            {"analytic_hypervolume", rep.analytic_hypervolume},
            {"hypervolume_ratio", rep.hypervolume / rep.analytic_hypervolume},
            {"generational_distance_mean", rep.gd_mean},
            {"generational_distance_max", rep.gd_max},
            {"front_size", rep.front_size},
            {"excluded_region_points", rep.excluded_points},
            {"generations", rep.generations},
            {"seconds", rep.seconds}};
  write_file_atomic(cfg.paths.results / "benchmark" / (rep.suite + ".json"), dump(j));
  return rep;
}

// ---------------------------------------------------------------------------

CampaignReport cmd_campaign(const CampaignConfig& cfg) {
  CampaignReport rep;
  rep.dataset = cmd_dataset(cfg);
  rep.training = cmd_train(cfg);

  const auto dir = [&](RunMode m) { return cfg.paths.results / std::string(to_string(m)); };
  rep.classical = cmd_optimize(cfg, {RunMode::classical, {}, {}, {}});
  rep.hybrid = cmd_optimize(cfg, {RunMode::hybrid, {}, dir(RunMode::classical), {}});
  rep.factor2 = cmd_optimize(cfg, {RunMode::factor2, dir(RunMode::hybrid), dir(RunMode::classical), {}});

  rep.hybrid_vs_classical =
      cmd_compare(dir(RunMode::classical), dir(RunMode::hybrid), cfg.paths.results / "compare_classical_hybrid");
  rep.factor2_vs_classical =
      cmd_compare(dir(RunMode::classical), dir(RunMode::factor2), cfg.paths.results / "compare_classical_factor2");
  rep.predict_plot = cmd_predict_plot(cfg, dir(RunMode::hybrid), cfg.paths.results / "predict_plot_hybrid");
  return rep;
}

}  // namespace pmsmopt
