#pragma once

#include "neubm/calibration.hpp"
#include "neubm/dataset.hpp"
#include "neubm/gnn.hpp"
#include "neubm/metrics.hpp"
#include "neubm/neutral.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace neubm {

struct ProtocolConfig {
  int num_seeds = 5;
  int k_folds = 5;
  double train_frac = 0.1;
  double val_frac = 0.1;
  Index min_per_class = 5;
  std::uint64_t base_seed = 0;
};

struct NoiseSweep {
  NoiseKind kind = NoiseKind::Feature;
  std::vector<double> levels;
  std::uint64_t seed = 0;
};

/// Mirrors the JSON experiment config. Exactly one of dataset_path / sbm is
/// set.
struct ExperimentConfig {
  std::optional<std::string> dataset_path;
  std::optional<SbmConfig> sbm;
  ModelConfig model;  // input_dim and num_classes come from the data
  TrainConfig train;
  NeutralConfig neutral;
  StatsScope stats_scope = StatsScope::AllNodes;
  std::vector<CalibrationSpec> calibration{CalibrationSpec::none(), CalibrationSpec::subtract()};
  ProtocolConfig protocol;
  std::optional<NoiseSweep> noise;
  std::vector<double> rho_sweep;
  std::vector<double> lambda_grid{0.5, 0.75, 1.0, 1.25, 1.5};
  std::string output_dir = "results";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// FNV-1a over the canonical JSON form, as 16 hex digits.
  std::string hash() const;

  void validate() const;
};

/// One evaluated output: which neutral reference feeds which calibration.
struct CalibrationArm {
  std::string label;
  CalibrationSpec spec;
  std::optional<ConstructionVariant> neutral_variant;  // nullopt: L_neutral = 0
};

struct ResultRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  int fold_id = 0;
  std::string arm_label;
  std::string spec_id;
  std::string neutral;  // construction variant or "zero"
  std::uint64_t split_seed = 0;
  std::uint64_t model_seed = 0;
  std::uint64_t neutral_seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_score = 0.0;
  double wall_time_seconds = 0.0;  // excluded from deterministic reports
  std::optional<MetricsReport> metrics;
  std::optional<BiasReductionReport> bias;
  std::string error;

  std::string key() const;
};

struct MetricSummary {
  double mean = 0.0;
  double std_dev = 0.0;  // population
};

struct AggregateRow {
  std::string label;
  std::string spec_id;
  std::string neutral;
  int n_runs = 0;
  int n_failed = 0;
  MetricSummary f1_macro;
  MetricSummary f1_weighted;
  MetricSummary f1_micro;
  MetricSummary accuracy;
  MetricSummary majority_prob;

  bool complete() const { return n_failed == 0 && n_runs > 0; }
};

struct ExperimentResults {
  std::string config_hash;
  std::vector<ResultRecord> records;
  std::vector<AggregateRow> aggregates;
};

// Section parsers shared by the experiment config and the single-step
// commands. Missing keys keep their defaults; unknown keys are rejected.
SbmConfig parse_sbm_config(const nlohmann::json& j);
ModelConfig parse_model_config(const nlohmann::json& j);
TrainConfig parse_train_config(const nlohmann::json& j);
NeutralConfig parse_neutral_config(const nlohmann::json& j, StatsScope* scope = nullptr);
CalibrationSpec parse_calibration_spec(const nlohmann::json& j);
ProtocolConfig parse_protocol_config(const nlohmann::json& j);
nlohmann::json calibration_spec_to_json(const CalibrationSpec& spec);

/// Resolves config.dataset_path or generates config.sbm.
Graph load_experiment_dataset(const ExperimentConfig& config);

/// config.calibration evaluated against config.neutral.
std::vector<CalibrationArm> experiment_arms(const ExperimentConfig& config);

/// Neutral-construction, calibration-variant (incl. the lambda grid) and
/// application-position ablations.
std::vector<CalibrationArm> ablation_arms(const ExperimentConfig& config);

/// Seeds x folds; one training per (seed, fold), shared by every arm.
ExperimentResults run_arms(const ExperimentConfig& config, const Graph& data, const std::vector<CalibrationArm>& arms);

ExperimentResults run_experiment(const ExperimentConfig& config, const Graph& data);
ExperimentResults run_ablations(const ExperimentConfig& config, const Graph& data);

/// Mean and population std per arm, in arm order, from records.
std::vector<AggregateRow> aggregate(const std::vector<ResultRecord>& records, const std::vector<CalibrationArm>& arms);

struct SweepPoint {
  std::string variable;  // "rho", "feature_noise" or "structural_noise"
  double value = 0.0;
  ExperimentResults results;
};

struct SweepResults {
  std::string config_hash;
  std::vector<SweepPoint> points;
};

SweepResults run_sensitivity(const ExperimentConfig& config);

nlohmann::json results_to_json(const ExperimentResults& results);
nlohmann::json sweep_to_json(const SweepResults& sweep);
nlohmann::json record_to_json(const ResultRecord& record);
nlohmann::json metrics_to_json(const MetricsReport& report);

/// Writes <stem>.json, <stem>.csv (aggregates) and <stem>_records.csv.
void emit_report(const ExperimentResults& results, const std::filesystem::path& dir, const std::string& stem);

/// Writes sweep.json, sweep.csv and one SVG chart per sweep variable.
void emit_sweep_report(const SweepResults& sweep, const std::filesystem::path& dir);

/// Line chart of f1_macro mean against the sweep value, one series per arm,
/// for the points of `variable` in a sweep JSON document.
std::string render_sweep_svg(const nlohmann::json& sweep_json, const std::string& variable,
                             const std::string& metric = "f1_macro");

/// Writes per-record wall times; kept apart from the deterministic reports.
void emit_timing(const std::vector<const ExperimentResults*>& results, const std::filesystem::path& path);

}  // namespace neubm
