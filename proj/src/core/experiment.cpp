#include "neubm/experiment.hpp"

#include "neubm/error.hpp"
#include "neubm/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace neubm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

json sbm_to_json(const SbmConfig& s) {
  return {{"num_classes", s.num_classes}, {"total_nodes", s.total_nodes},
          {"rho", s.rho},                 {"p_intra", s.p_intra},
          {"p_inter", s.p_inter},         {"feature_dim", s.feature_dim},
          {"class_mean_separation", s.class_mean_separation},
          {"feature_std", s.feature_std}, {"seed", s.seed}};
}

}  // namespace

json calibration_spec_to_json(const CalibrationSpec& s) {
  json j = {{"variant", to_string(s.variant)}, {"position", to_string(s.position)}};
  if (s.variant == CalibrationVariant::Scale) j["lambda"] = s.lambda;
  return j;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.std_dev += (x - s.mean) * (x - s.mean);
  s.std_dev = std::sqrt(s.std_dev / static_cast<double>(xs.size()));
  return s;
}

json summary_to_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.std_dev}, {"display", format_mean_std(s.mean, s.std_dev)}};
}

std::ofstream open_report(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("output directory " + dir.string() + " is not writable");
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string neutral_name(const std::optional<ConstructionVariant>& v) { return v ? to_string(*v) : "zero"; }

}  // namespace

namespace {

template <typename F>
auto config_section(const char* what, F&& parse) {
  try {
    return parse();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid ") + what + ": " + e.what());
  }
}

}  // namespace

SbmConfig parse_sbm_config(const json& j) {
  return config_section("SBM config", [&] {
    reject_unknown(j, {"num_classes", "total_nodes", "rho", "p_intra", "p_inter", "feature_dim",
                       "class_mean_separation", "feature_std", "seed"}, "sbm");
    SbmConfig s;
    s.num_classes = value_or(j, "num_classes", s.num_classes);
    s.total_nodes = value_or(j, "total_nodes", s.total_nodes);
    s.rho = value_or(j, "rho", s.rho);
    s.p_intra = value_or(j, "p_intra", s.p_intra);
    s.p_inter = value_or(j, "p_inter", s.p_inter);
    s.feature_dim = value_or(j, "feature_dim", s.feature_dim);
    s.class_mean_separation = value_or(j, "class_mean_separation", s.class_mean_separation);
    s.feature_std = value_or(j, "feature_std", s.feature_std);
    s.seed = value_or(j, "seed", s.seed);
    return s;
  });
}

ModelConfig parse_model_config(const json& m) {
  return config_section("model config", [&] {
    reject_unknown(m, {"architecture", "hidden_dim", "dropout", "num_heads", "seed"}, "model");
    ModelConfig c;
    c.architecture = architecture_from_string(value_or<std::string>(m, "architecture", "gcn"));
    c.hidden_dim = value_or(m, "hidden_dim", c.hidden_dim);
    c.dropout = value_or(m, "dropout", c.dropout);
    c.num_heads = value_or(m, "num_heads", c.num_heads);
    c.seed = value_or(m, "seed", c.seed);
    return c;
  });
}

TrainConfig parse_train_config(const json& t) {
  return config_section("train config", [&] {
    reject_unknown(t, {"learning_rate", "weight_decay", "max_epochs", "patience", "seed"}, "train");
    TrainConfig c;
    c.learning_rate = value_or(t, "learning_rate", c.learning_rate);
    c.weight_decay = value_or(t, "weight_decay", c.weight_decay);
    c.max_epochs = value_or(t, "max_epochs", c.max_epochs);
    c.patience = value_or(t, "patience", c.patience);
    c.seed = value_or(t, "seed", c.seed);
    c.validate();
    return c;
  });
}

NeutralConfig parse_neutral_config(const json& n, StatsScope* scope) {
  return config_section("neutral config", [&] {
    reject_unknown(n, {"node_count_override", "covariance_mode", "regularization_eps_scale", "construction_variant",
                       "refresh_every", "seed", "stats_scope"}, "neutral");
    NeutralConfig c;
    if (n.contains("node_count_override") && !n.at("node_count_override").is_null()) {
      c.node_count_override = n.at("node_count_override").get<Index>();
    }
    c.covariance_mode = covariance_mode_from_string(value_or<std::string>(n, "covariance_mode", "full"));
    c.regularization_eps_scale = value_or(n, "regularization_eps_scale", c.regularization_eps_scale);
    c.construction_variant =
        construction_variant_from_string(value_or<std::string>(n, "construction_variant", "mean_cov"));
    if (n.contains("refresh_every")) {
      const json& r = n.at("refresh_every");
      if (r.is_string()) {
        if (r.get<std::string>() != "never") throw ConfigError("refresh_every must be 'never' or an integer");
        c.refresh_every = 0;
      } else {
        c.refresh_every = r.get<int>();
        if (c.refresh_every < 1) throw ConfigError("refresh_every must be 'never' or in [1,10]");
      }
    }
    c.seed = value_or(n, "seed", c.seed);
    const auto scope_name = value_or<std::string>(n, "stats_scope", "all_nodes");
    const StatsScope parsed = stats_scope_from_string(scope_name);
    if (scope) *scope = parsed;
    c.validate();
    return c;
  });
}

CalibrationSpec parse_calibration_spec(const json& j) {
  return config_section("calibration spec", [&] {
    reject_unknown(j, {"variant", "position", "lambda"}, "calibration entry");
    CalibrationSpec s;
    s.variant = calibration_variant_from_string(j.at("variant").get<std::string>());
    s.position = calibration_position_from_string(value_or<std::string>(j, "position", "logits"));
    if (s.variant == CalibrationVariant::Scale) {
      if (!j.contains("lambda")) throw ConfigError("scale calibration requires 'lambda'");
      s.lambda = j.at("lambda").get<double>();
    } else if (j.contains("lambda")) {
      throw ConfigError("'lambda' is only valid for the scale variant");
    }
    return s;
  });
}

ProtocolConfig parse_protocol_config(const json& p) {
  return config_section("protocol config", [&] {
    reject_unknown(p, {"num_seeds", "k_folds", "train_frac", "val_frac", "min_per_class", "base_seed"}, "protocol");
    ProtocolConfig c;
    c.num_seeds = value_or(p, "num_seeds", c.num_seeds);
    c.k_folds = value_or(p, "k_folds", c.k_folds);
    c.train_frac = value_or(p, "train_frac", c.train_frac);
    c.val_frac = value_or(p, "val_frac", c.val_frac);
    c.min_per_class = value_or(p, "min_per_class", c.min_per_class);
    c.base_seed = value_or(p, "base_seed", c.base_seed);
    return c;
  });
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  return config_section("experiment config", [&] {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    reject_unknown(j, {"dataset", "model", "train", "neutral", "calibration", "protocol", "noise", "rho_sweep",
                       "lambda_grid", "output_dir"}, "experiment config");
    ExperimentConfig c;
    const json& ds = j.at("dataset");
    reject_unknown(ds, {"path", "sbm"}, "dataset");
    if (ds.contains("path") == ds.contains("sbm")) throw ConfigError("dataset needs exactly one of 'path' or 'sbm'");
    if (ds.contains("path")) c.dataset_path = ds.at("path").get<std::string>();
    if (ds.contains("sbm")) c.sbm = parse_sbm_config(ds.at("sbm"));
    if (j.contains("model")) c.model = parse_model_config(j.at("model"));
    if (j.contains("train")) c.train = parse_train_config(j.at("train"));
    if (j.contains("neutral")) c.neutral = parse_neutral_config(j.at("neutral"), &c.stats_scope);
    if (j.contains("calibration")) {
      c.calibration.clear();
      for (const auto& s : j.at("calibration")) c.calibration.push_back(parse_calibration_spec(s));
    }
    if (j.contains("protocol")) c.protocol = parse_protocol_config(j.at("protocol"));
    if (j.contains("noise") && !j.at("noise").is_null()) {
      const json& n = j.at("noise");
      reject_unknown(n, {"kind", "levels", "seed"}, "noise");
      NoiseSweep sweep;
      sweep.kind = noise_kind_from_string(n.at("kind").get<std::string>());
      sweep.levels = n.at("levels").get<std::vector<double>>();
      sweep.seed = value_or(n, "seed", sweep.seed);
      c.noise = sweep;
    }
    c.rho_sweep = value_or(j, "rho_sweep", c.rho_sweep);
    c.lambda_grid = value_or(j, "lambda_grid", c.lambda_grid);
    c.output_dir = value_or(j, "output_dir", c.output_dir);
    c.validate();
    return c;
  });
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["dataset"] = dataset_path ? json{{"path", *dataset_path}} : json{{"sbm", sbm_to_json(*sbm)}};
  j["model"] = {{"architecture", neubm::to_string(model.architecture)},
                {"hidden_dim", model.hidden_dim},
                {"dropout", model.dropout},
                {"num_heads", model.num_heads},
                {"seed", model.seed}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"weight_decay", train.weight_decay},
                {"max_epochs", train.max_epochs},
                {"patience", train.patience},
                {"seed", train.seed}};
  j["neutral"] = {{"node_count_override", neutral.node_count_override ? json(*neutral.node_count_override) : json(nullptr)},
                  {"covariance_mode", neubm::to_string(neutral.covariance_mode)},
                  {"regularization_eps_scale", neutral.regularization_eps_scale},
                  {"construction_variant", neubm::to_string(neutral.construction_variant)},
                  {"refresh_every", neutral.refresh_every == 0 ? json("never") : json(neutral.refresh_every)},
                  {"seed", neutral.seed},
                  {"stats_scope", neubm::to_string(stats_scope)}};
  j["calibration"] = json::array();
  for (const auto& s : calibration) j["calibration"].push_back(calibration_spec_to_json(s));
  j["protocol"] = {{"num_seeds", protocol.num_seeds},   {"k_folds", protocol.k_folds},
                   {"train_frac", protocol.train_frac}, {"val_frac", protocol.val_frac},
                   {"min_per_class", protocol.min_per_class}, {"base_seed", protocol.base_seed}};
  j["noise"] = noise ? json{{"kind", neubm::to_string(noise->kind)}, {"levels", noise->levels}, {"seed", noise->seed}}
                     : json(nullptr);
  j["rho_sweep"] = rho_sweep;
  j["lambda_grid"] = lambda_grid;
  j["output_dir"] = output_dir;
  return j;
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("output_dir");  // where results go does not change them
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

void ExperimentConfig::validate() const {
  if (dataset_path.has_value() == sbm.has_value()) throw ConfigError("dataset needs exactly one of 'path' or 'sbm'");
  if (protocol.num_seeds < 1) throw ConfigError("protocol.num_seeds must be >= 1");
  if (protocol.k_folds < 1) throw ConfigError("protocol.k_folds must be >= 1");
  if (protocol.train_frac < 0.0 || protocol.val_frac < 0.0 || protocol.train_frac + protocol.val_frac >= 1.0) {
    throw ConfigError("protocol fractions must be nonnegative and sum to less than 1");
  }
  if (calibration.empty()) throw ConfigError("at least one calibration spec is required");
  train.validate();
  neutral.validate();
  if (noise) {
    for (double l : noise->levels) {
      if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("noise levels must lie in [0,1]");
    }
  }
  for (double r : rho_sweep) {
    if (!(r >= 1.0)) throw ConfigError("rho_sweep values must be >= 1");
  }
  if (!rho_sweep.empty() && !sbm) throw ConfigError("rho_sweep requires an SBM dataset");
}

std::string ResultRecord::key() const {
  return config_hash + "/seed" + std::to_string(seed) + "/fold" + std::to_string(fold_id) + "/" + arm_label;
}

Graph load_experiment_dataset(const ExperimentConfig& config) {
  if (config.dataset_path) return load_canonical(*config.dataset_path);
  return generate_sbm(*config.sbm);
}

std::vector<CalibrationArm> experiment_arms(const ExperimentConfig& config) {
  std::vector<CalibrationArm> arms;
  std::set<std::string> seen;
  for (const auto& spec : config.calibration) {
    CalibrationArm arm{spec.id(), spec, std::nullopt};
    if (spec.variant != CalibrationVariant::None) arm.neutral_variant = config.neutral.construction_variant;
    if (!seen.insert(arm.label).second) throw ConfigError("duplicate calibration spec '" + arm.label + "'");
    arms.push_back(arm);
  }
  return arms;
}

std::vector<CalibrationArm> ablation_arms(const ExperimentConfig& config) {
  const auto sub = CalibrationSpec::subtract();
  const auto main = config.neutral.construction_variant;
  std::vector<CalibrationArm> arms;
  arms.push_back({"baseline|none@logits", CalibrationSpec::none(), std::nullopt});
  arms.push_back({"neutral=zero|subtract@logits", sub, std::nullopt});
  for (auto v : {ConstructionVariant::Random, ConstructionVariant::ClassBalanced, ConstructionVariant::MeanCov}) {
    arms.push_back({"neutral=" + to_string(v) + "|subtract@logits", sub, v});
  }
  arms.push_back({"calibration=subtract@logits", sub, main});
  for (double lambda : config.lambda_grid) {
    const auto s = CalibrationSpec::scale(lambda);
    arms.push_back({"calibration=" + s.id(), s, main});
  }
  arms.push_back({"calibration=normalize@logits", CalibrationSpec::normalize(), main});
  arms.push_back({"position=logits", sub, main});
  CalibrationSpec post = sub;
  post.position = CalibrationPosition::PostSoftmax;
  arms.push_back({"position=post_softmax", post, main});
  return arms;
}

ExperimentResults run_arms(const ExperimentConfig& config, const Graph& data, const std::vector<CalibrationArm>& arms) {
  config.validate();
  if (!data.has_labels()) throw DataError("experiments need a labeled dataset");
  ExperimentResults results;
  results.config_hash = config.hash();

  ModelConfig model_config = config.model;
  model_config.input_dim = data.num_features();
  model_config.num_classes = data.num_classes;

  for (int r = 0; r < config.protocol.num_seeds; ++r) {
    const std::uint64_t run_seed = config.protocol.base_seed + static_cast<std::uint64_t>(r);
    for (int f = 0; f < config.protocol.k_folds; ++f) {
      ResultRecord base;
      base.config_hash = results.config_hash;
      base.seed = run_seed;
      base.fold_id = f;
      base.split_seed = run_seed + 1000ULL * static_cast<std::uint64_t>(f);
      base.model_seed = config.model.seed + run_seed;
      base.neutral_seed = config.neutral.seed + run_seed;

      std::vector<ResultRecord> batch;
      try {
        SplitAssignment split = stratified_split(data, config.protocol.train_frac, config.protocol.val_frac,
                                                 config.protocol.min_per_class, base.split_seed);
        split.fold_id = f;
        Graph graph = data;
        split.apply_to(graph);
        const DatasetStats stats = compute_dataset_stats(graph, config.stats_scope);

        NeutralConfig neutral_config = config.neutral;
        neutral_config.seed = base.neutral_seed;

        ModelConfig mc = model_config;
        mc.seed = base.model_seed;
        TrainConfig tc = config.train;
        tc.seed = config.train.seed + run_seed;

        ValidationScorer scorer;
        NeutralGraph selection_neutral;
        if (config.neutral.refresh_every > 0 && !split.val.empty()) {
          std::vector<int> val_truth;
          for (Index v : split.val) val_truth.push_back(graph.labels[static_cast<std::size_t>(v)]);
          scorer = [&, val_truth](const ModelParams& params, const Matrix& logits, int epoch) {
            if ((epoch - 1) % config.neutral.refresh_every == 0) {
              NeutralConfig nc = neutral_config;
              nc.seed = neutral_config.seed + static_cast<std::uint64_t>(epoch);
              selection_neutral = construct_neutral(stats, &graph, nc);
            }
            const auto out = calibrate(logits, neutral_logit_vector(params, selection_neutral), CalibrationSpec::subtract());
            std::vector<int> pred;
            for (Index v : split.val) pred.push_back(out.predicted_labels[static_cast<std::size_t>(v)]);
            return f1_scores(confusion(pred, val_truth, graph.num_classes)).f1_macro;
          };
        }

        const TrainResult trained = train(graph, split, mc, tc, scorer);
        base.epochs_run = trained.report.epochs_run;
        base.best_epoch = trained.report.best_epoch;
        base.best_val_score = trained.report.val_metric_curve.empty()
                                  ? 0.0
                                  : trained.report.val_metric_curve[static_cast<std::size_t>(trained.report.best_epoch - 1)];
        base.wall_time_seconds = trained.report.wall_time_seconds;

        const Matrix logits = predict_logits(trained.params, graph);
        const auto [majority, minority] = majority_minority_classes(graph.labels, graph.num_classes, split.train);
        const Vector zero = Vector::Zero(graph.num_classes);
        const CalibratedOutput uncalibrated = calibrate(logits, zero, CalibrationSpec::none());

        std::map<ConstructionVariant, Vector> neutral_vectors;
        for (const auto& arm : arms) {
          ResultRecord rec = base;
          rec.arm_label = arm.label;
          rec.spec_id = arm.spec.id();
          rec.neutral = neutral_name(arm.neutral_variant);
          try {
            Vector reference = zero;
            if (arm.neutral_variant) {
              auto it = neutral_vectors.find(*arm.neutral_variant);
              if (it == neutral_vectors.end()) {
                NeutralConfig nc = neutral_config;
                nc.construction_variant = *arm.neutral_variant;
                const NeutralGraph neutral = construct_neutral(stats, &graph, nc);
                it = neutral_vectors.emplace(*arm.neutral_variant, neutral_logit_vector(trained.params, neutral)).first;
              }
              reference = it->second;
            }
            const CalibratedOutput out = calibrate(logits, reference, arm.spec);
            rec.metrics = f1_scores(confusion(out.predicted_labels, graph.labels, graph.num_classes, split.test));
            rec.bias = check_bias_reduction(logits, uncalibrated, out, reference, majority, minority, split.test);
          } catch (const Error& e) {
            rec.error = e.what();
          }
          batch.push_back(std::move(rec));
        }
      } catch (const Error& e) {
        batch.clear();
        for (const auto& arm : arms) {
          ResultRecord rec = base;
          rec.arm_label = arm.label;
          rec.spec_id = arm.spec.id();
          rec.neutral = neutral_name(arm.neutral_variant);
          rec.error = e.what();
          batch.push_back(std::move(rec));
        }
      }
      for (auto& rec : batch) results.records.push_back(std::move(rec));
    }
  }
  results.aggregates = aggregate(results.records, arms);
  return results;
}

ExperimentResults run_experiment(const ExperimentConfig& config, const Graph& data) {
  return run_arms(config, data, experiment_arms(config));
}

ExperimentResults run_ablations(const ExperimentConfig& config, const Graph& data) {
  return run_arms(config, data, ablation_arms(config));
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRecord>& records, const std::vector<CalibrationArm>& arms) {
  std::vector<AggregateRow> rows;
  for (const auto& arm : arms) {
    AggregateRow row;
    row.label = arm.label;
    row.spec_id = arm.spec.id();
    row.neutral = neutral_name(arm.neutral_variant);
    std::vector<double> macro, weighted, micro, acc, majority;
    for (const auto& rec : records) {
      if (rec.arm_label != arm.label) continue;
      ++row.n_runs;
      if (!rec.metrics) {
        ++row.n_failed;
        continue;
      }
      macro.push_back(rec.metrics->f1_macro);
      weighted.push_back(rec.metrics->f1_weighted);
      micro.push_back(rec.metrics->f1_micro);
      acc.push_back(rec.metrics->accuracy);
      if (rec.bias) majority.push_back(rec.bias->majority_prob_after);
    }
    row.f1_macro = summarize(macro);
    row.f1_weighted = summarize(weighted);
    row.f1_micro = summarize(micro);
    row.accuracy = summarize(acc);
    row.majority_prob = summarize(majority);
    rows.push_back(row);
  }
  return rows;
}

SweepResults run_sensitivity(const ExperimentConfig& config) {
  config.validate();
  if (config.rho_sweep.empty() && (!config.noise || config.noise->levels.empty())) {
    throw ConfigError("sensitivity analysis needs 'rho_sweep' or 'noise' levels");
  }
  SweepResults sweep;
  sweep.config_hash = config.hash();
  const auto arms = experiment_arms(config);
  for (double rho : config.rho_sweep) {
    SbmConfig sbm = *config.sbm;
    sbm.rho = rho;
    sweep.points.push_back({"rho", rho, run_arms(config, generate_sbm(sbm), arms)});
  }
  if (config.noise) {
    const Graph base = load_experiment_dataset(config);
    const std::string variable = to_string(config.noise->kind) + "_noise";
    for (double level : config.noise->levels) {
      const Graph noisy = inject_noise(base, {config.noise->kind, level, config.noise->seed});
      sweep.points.push_back({variable, level, run_arms(config, noisy, arms)});
    }
  }
  return sweep;
}

json metrics_to_json(const MetricsReport& report) {
  json per_class = json::array();
  for (const auto& c : report.per_class) {
    per_class.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}});
  }
  return {{"f1_macro", report.f1_macro}, {"f1_weighted", report.f1_weighted}, {"f1_micro", report.f1_micro},
          {"accuracy", report.accuracy}, {"rho", report.rho},                 {"per_class", per_class}};
}

json record_to_json(const ResultRecord& r) {
  json j = {{"key", r.key()},
            {"config_hash", r.config_hash},
            {"seed", r.seed},
            {"fold_id", r.fold_id},
            {"arm", r.arm_label},
            {"spec_id", r.spec_id},
            {"neutral", r.neutral},
            {"derived_seeds", {{"split", r.split_seed}, {"model", r.model_seed}, {"neutral", r.neutral_seed}}},
            {"train", {{"epochs_run", r.epochs_run}, {"best_epoch", r.best_epoch}, {"best_val_score", r.best_val_score}}},
            {"metrics", r.metrics ? metrics_to_json(*r.metrics) : json(nullptr)},
            {"error", r.error.empty() ? json(nullptr) : json(r.error)}};
  if (r.bias) {
    const auto& b = *r.bias;
    j["bias"] = {{"majority_class", b.majority_class},
                 {"minority_class", b.minority_class},
                 {"majority_prob_before", b.majority_prob_before},
                 {"majority_prob_after", b.majority_prob_after},
                 {"class_shift", std::vector<double>(b.class_shift.data(), b.class_shift.data() + b.class_shift.size())},
                 {"premise_holds", b.premise_holds},
                 {"ordering_holds", b.ordering_holds}};
  } else {
    j["bias"] = nullptr;
  }
  return j;
}

json results_to_json(const ExperimentResults& results) {
  json aggregates = json::array();
  for (const auto& a : results.aggregates) {
    aggregates.push_back({{"label", a.label},
                          {"spec_id", a.spec_id},
                          {"neutral", a.neutral},
                          {"n_runs", a.n_runs},
                          {"n_failed", a.n_failed},
                          {"complete", a.complete()},
                          {"f1_macro", summary_to_json(a.f1_macro)},
                          {"f1_weighted", summary_to_json(a.f1_weighted)},
                          {"f1_micro", summary_to_json(a.f1_micro)},
                          {"accuracy", summary_to_json(a.accuracy)},
                          {"majority_prob", summary_to_json(a.majority_prob)}});
  }
  json records = json::array();
  for (const auto& r : results.records) records.push_back(record_to_json(r));
  return {{"config_hash", results.config_hash},
          {"std_convention", "population (divide by n)"},
          {"aggregates", aggregates},
          {"records", records}};
}

json sweep_to_json(const SweepResults& sweep) {
  json points = json::array();
  for (const auto& p : sweep.points) {
    json point = results_to_json(p.results);
    point.erase("records");
    point.erase("config_hash");
    point.erase("std_convention");
    point["variable"] = p.variable;
    point["value"] = p.value;
    points.push_back(point);
  }
  return {{"config_hash", sweep.config_hash}, {"std_convention", "population (divide by n)"}, {"points", points}};
}

namespace {

const char* kAggregateHeader =
    "label,spec_id,neutral,n_runs,n_failed,complete,f1_macro,f1_weighted,f1_micro,accuracy,"
    "f1_macro_mean,f1_macro_std,f1_weighted_mean,f1_weighted_std,f1_micro_mean,f1_micro_std,accuracy_mean,accuracy_std";

std::string aggregate_csv_cells(const AggregateRow& a) {
  std::string s = csv_quote(a.label) + "," + csv_quote(a.spec_id) + "," + a.neutral + "," + std::to_string(a.n_runs) +
                  "," + std::to_string(a.n_failed) + "," + (a.complete() ? "yes" : "no");
  for (const auto* m : {&a.f1_macro, &a.f1_weighted, &a.f1_micro, &a.accuracy}) {
    s += "," + format_mean_std(m->mean, m->std_dev);
  }
  for (const auto* m : {&a.f1_macro, &a.f1_weighted, &a.f1_micro, &a.accuracy}) {
    s += "," + format_real(m->mean) + "," + format_real(m->std_dev);
  }
  return s;
}

}  // namespace

void emit_report(const ExperimentResults& results, const fs::path& dir, const std::string& stem) {
  ensure_dir(dir);
  {
    auto out = open_report(dir / (stem + ".json"));
    out << results_to_json(results).dump(2) << "\n";
  }
  {
    auto out = open_report(dir / (stem + ".csv"));
    out << kAggregateHeader << "\n";
    for (const auto& a : results.aggregates) out << aggregate_csv_cells(a) << "\n";
  }
  {
    auto out = open_report(dir / (stem + "_records.csv"));
    out << "key,seed,fold_id,arm,spec_id,neutral,epochs_run,best_epoch,f1_macro,f1_weighted,f1_micro,accuracy,"
           "majority_prob_before,majority_prob_after,error\n";
    for (const auto& r : results.records) {
      out << csv_quote(r.key()) << "," << r.seed << "," << r.fold_id << "," << csv_quote(r.arm_label) << ","
          << csv_quote(r.spec_id) << "," << r.neutral << "," << r.epochs_run << "," << r.best_epoch;
      if (r.metrics) {
        out << "," << format_real(r.metrics->f1_macro) << "," << format_real(r.metrics->f1_weighted) << ","
            << format_real(r.metrics->f1_micro) << "," << format_real(r.metrics->accuracy);
      } else {
        out << ",,,,";
      }
      if (r.bias) {
        out << "," << format_real(r.bias->majority_prob_before) << "," << format_real(r.bias->majority_prob_after);
      } else {
        out << ",,";
      }
      out << "," << csv_quote(r.error) << "\n";
    }
  }
}

void emit_sweep_report(const SweepResults& sweep, const fs::path& dir) {
  ensure_dir(dir);
  const json doc = sweep_to_json(sweep);
  {
    auto out = open_report(dir / "sweep.json");
    out << doc.dump(2) << "\n";
  }
  std::vector<std::string> variables;
  {
    auto out = open_report(dir / "sweep.csv");
    out << "variable,value," << kAggregateHeader << "\n";
    for (const auto& p : sweep.points) {
      if (std::find(variables.begin(), variables.end(), p.variable) == variables.end()) variables.push_back(p.variable);
      for (const auto& a : p.results.aggregates) {
        out << p.variable << "," << format_real(p.value) << "," << aggregate_csv_cells(a) << "\n";
      }
    }
  }
  for (const auto& v : variables) {
    auto out = open_report(dir / ("sweep_" + v + ".svg"));
    out << render_sweep_svg(doc, v);
  }
}

std::string render_sweep_svg(const json& sweep_json, const std::string& variable, const std::string& metric) {
  // series label -> (x, y) points, in first-seen order
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& p : sweep_json.at("points")) {
    if (p.at("variable") != variable) continue;
    const double x = p.at("value").get<double>();
    for (const auto& a : p.at("aggregates")) {
      const auto label = a.at("label").get<std::string>();
      if (!series.count(label)) order.push_back(label);
      series[label].emplace_back(x, a.at(metric).at("mean").get<double>());
    }
  }
  const double width = 640, height = 400, left = 70, right = 200, top = 40, bottom = 60;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& [_, pts] : series) {
    for (const auto& [x, y] : pts) {
      xmin = first ? x : std::min(xmin, x);
      xmax = first ? x : std::max(xmax, x);
      ymin = first ? y : std::min(ymin, y);
      ymax = first ? y : std::max(ymax, y);
      first = false;
    }
  }
  if (xmax - xmin <= 0.0) { xmin -= 0.5; xmax += 0.5; }
  ymin = std::max(0.0, ymin - 0.05);
  ymax = std::min(1.0, ymax + 0.05);
  if (ymax - ymin <= 0.0) { ymin = 0.0; ymax = 1.0; }
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << metric << " vs "
     << variable << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    os << "<text x=\"" << format_fixed(sx(xv), 1) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
       << format_fixed(xv, 2) << "</text>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << format_fixed(sy(yv) + 4, 1) << "\" text-anchor=\"end\">"
       << format_fixed(yv, 2) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">" << variable
     << "</text>\n";
  for (std::size_t s = 0; s < order.size(); ++s) {
    const char* color = palette[s % std::size(palette)];
    auto pts = series[order[s]];
    std::sort(pts.begin(), pts.end());
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << (i ? " " : "") << format_fixed(sx(pts[i].first), 1) << "," << format_fixed(sy(pts[i].second), 1);
    }
    os << "\"/>\n";
    for (const auto& [x, y] : pts) {
      os << "<circle cx=\"" << format_fixed(sx(x), 1) << "\" cy=\"" << format_fixed(sy(y), 1) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(s);
    os << "<rect x=\"" << left + pw + 15 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color
       << "\"/>\n";
    os << "<text x=\"" << left + pw + 32 << "\" y=\"" << ly + 1 << "\">" << order[s] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_timing(const std::vector<const ExperimentResults*>& results, const fs::path& path) {
  json rows = json::array();
  std::set<std::string> seen;
  for (const auto* r : results) {
    for (const auto& rec : r->records) {
      const std::string run = rec.config_hash + "/seed" + std::to_string(rec.seed) + "/fold" + std::to_string(rec.fold_id);
      if (!seen.insert(run).second) continue;
      rows.push_back({{"run", run}, {"epochs_run", rec.epochs_run}, {"wall_time_seconds", rec.wall_time_seconds}});
    }
  }
  auto out = open_report(path);
  out << json{{"runs", rows}}.dump(2) << "\n";
}

}  // namespace neubm
