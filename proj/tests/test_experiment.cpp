#include "neubm/error.hpp"
#include "neubm/experiment.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

using namespace neubm;
using neubm::testing::slurp;
using neubm::testing::TempDir;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "dataset": {"sbm": {"num_classes": 3, "total_nodes": 150, "rho": 3, "p_intra": 0.1, "p_inter": 0.01,
                        "feature_dim": 8, "class_mean_separation": 1.5, "seed": 3}},
    "model": {"hidden_dim": 8},
    "train": {"max_epochs": 30, "patience": 10},
    "protocol": {"num_seeds": 2, "k_folds": 2, "train_frac": 0.2, "val_frac": 0.1, "min_per_class": 2},
    "calibration": [{"variant": "none"}, {"variant": "subtract"}, {"variant": "scale", "lambda": 0.5}],
    "lambda_grid": [1.0, 1.5]
  })");
}

ExperimentConfig config_from(const json& j) { return ExperimentConfig::from_json(j); }

}  // namespace

TEST_CASE("config parsing, defaults and rejection") {
  const auto c = config_from(small_config());
  CHECK(c.sbm->num_classes == 3);
  CHECK(c.model.hidden_dim == 8);
  CHECK(c.model.architecture == Architecture::Gcn);
  CHECK(c.train.learning_rate == 0.005);
  CHECK(c.neutral.covariance_mode == CovarianceMode::Full);
  CHECK(c.calibration.size() == 3);
  CHECK(c.calibration[2].lambda == 0.5);
  CHECK(c.output_dir == "results");

  // canonical form parses back to the same config
  CHECK(config_from(c.to_json()).to_json() == c.to_json());
  CHECK(config_from(c.to_json()).hash() == c.hash());
  CHECK(c.hash().size() == 16);

  auto moved = small_config();
  moved["output_dir"] = "elsewhere";
  CHECK(config_from(moved).hash() == c.hash());
  auto changed = small_config();
  changed["train"]["patience"] = 11;
  CHECK(config_from(changed).hash() != c.hash());

  auto bad = small_config();
  bad["train"]["momentum"] = 0.9;
  CHECK_THROWS_AS(config_from(bad), ConfigError);
  bad = small_config();
  bad["dataset"]["path"] = "x";
  CHECK_THROWS_AS(config_from(bad), ConfigError);
  bad = small_config();
  bad["calibration"] = json::array({{{"variant", "scale"}}});
  CHECK_THROWS_AS(config_from(bad), ConfigError);
  bad = small_config();
  bad["calibration"] = json::array({{{"variant", "subtract"}, {"lambda", 2.0}}});
  CHECK_THROWS_AS(config_from(bad), ConfigError);
  bad = small_config();
  bad["protocol"]["train_frac"] = 0.95;
  CHECK_THROWS_AS(config_from(bad), ConfigError);
  bad = small_config();
  bad["protocol"]["num_seeds"] = "two";
  CHECK_THROWS_AS(config_from(bad), ConfigError);
  bad = small_config();
  bad["neutral"] = {{"refresh_every", "sometimes"}};
  CHECK_THROWS_AS(config_from(bad), ConfigError);

  auto scoped = small_config();
  scoped["neutral"] = {{"stats_scope", "train_mask"}, {"refresh_every", "never"}};
  CHECK(config_from(scoped).stats_scope == StatsScope::TrainMask);
}

TEST_CASE("arms") {
  const auto c = config_from(small_config());
  const auto arms = experiment_arms(c);
  REQUIRE(arms.size() == 3);
  CHECK(arms[0].label == "none@logits");
  CHECK_FALSE(arms[0].neutral_variant.has_value());
  CHECK(arms[1].neutral_variant == ConstructionVariant::MeanCov);

  const auto ab = ablation_arms(c);
  std::set<std::string> labels;
  for (const auto& a : ab) labels.insert(a.label);
  CHECK(labels.size() == ab.size());
  CHECK(labels.count("baseline|none@logits"));
  CHECK(labels.count("neutral=zero|subtract@logits"));
  CHECK(labels.count("neutral=class_balanced|subtract@logits"));
  CHECK(labels.count("calibration=scale(1.5)@logits"));
  CHECK(labels.count("position=post_softmax"));

  auto dup = small_config();
  dup["calibration"] = json::array({{{"variant", "none"}}, {{"variant", "none"}}});
  CHECK_THROWS_AS(experiment_arms(config_from(dup)), ConfigError);
}

TEST_CASE("experiment records, sharing and aggregates") {
  const auto c = config_from(small_config());
  const Graph data = load_experiment_dataset(c);
  const auto arms = experiment_arms(c);
  const auto r = run_arms(c, data, arms);
  REQUIRE(r.records.size() == 2 * 2 * 3);

  std::set<std::string> keys;
  std::map<std::pair<std::uint64_t, int>, std::vector<const ResultRecord*>> by_run;
  for (const auto& rec : r.records) {
    CHECK(rec.error.empty());
    REQUIRE(rec.metrics.has_value());
    keys.insert(rec.key());
    by_run[{rec.seed, rec.fold_id}].push_back(&rec);
  }
  CHECK(keys.size() == r.records.size());

  // one training per (seed, fold) feeds every arm
  for (const auto& [run, recs] : by_run) {
    for (const auto* rec : recs) {
      CHECK(rec->epochs_run == recs[0]->epochs_run);
      CHECK(rec->best_val_score == recs[0]->best_val_score);
      CHECK(rec->split_seed == recs[0]->split_seed);
    }
  }
  CHECK(by_run.size() == 4);

  // aggregates recomputed independently
  REQUIRE(r.aggregates.size() == 3);
  for (const auto& row : r.aggregates) {
    std::vector<double> v;
    for (const auto& rec : r.records) {
      if (rec.arm_label == row.label) v.push_back(rec.metrics->f1_macro);
    }
    double mean = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean) / static_cast<double>(v.size());
    CHECK(row.n_runs == 4);
    CHECK(row.complete());
    CHECK(std::abs(row.f1_macro.mean - mean) < 1e-12);
    CHECK(std::abs(row.f1_macro.std_dev - std::sqrt(var)) < 1e-12);
  }
}

TEST_CASE("single run has zero spread") {
  auto j = small_config();
  j["protocol"]["num_seeds"] = 1;
  j["protocol"]["k_folds"] = 1;
  j["calibration"] = json::array({{{"variant", "none"}}});
  const auto c = config_from(j);
  const auto r = run_experiment(c, load_experiment_dataset(c));
  REQUIRE(r.aggregates.size() == 1);
  CHECK(r.aggregates[0].f1_macro.std_dev == 0.0);
  CHECK(r.aggregates[0].n_runs == 1);
}

TEST_CASE("ablation identities") {
  auto j = small_config();
  j["protocol"]["num_seeds"] = 1;
  j["protocol"]["k_folds"] = 1;
  const auto c = config_from(j);
  const auto r = run_ablations(c, load_experiment_dataset(c));
  std::map<std::string, const AggregateRow*> rows;
  for (const auto& a : r.aggregates) rows[a.label] = &a;
  REQUIRE(rows.count("calibration=scale(1)@logits"));
  CHECK(rows["calibration=scale(1)@logits"]->f1_macro.mean == rows["calibration=subtract@logits"]->f1_macro.mean);
  CHECK(rows["neutral=zero|subtract@logits"]->f1_macro.mean == rows["baseline|none@logits"]->f1_macro.mean);
  CHECK(rows["neutral=mean_cov|subtract@logits"]->f1_macro.mean == rows["calibration=subtract@logits"]->f1_macro.mean);
}

TEST_CASE("reports are byte-identical across reruns") {
  TempDir a("runa"), b("runb");
  auto j = small_config();
  j["protocol"]["k_folds"] = 1;
  const auto c = config_from(j);
  const Graph data = load_experiment_dataset(c);
  emit_report(run_experiment(c, data), a.path(), "experiment");
  emit_report(run_experiment(c, data), b.path(), "experiment");
  for (const char* f : {"experiment.json", "experiment.csv", "experiment_records.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto doc = json::parse(slurp(a / "experiment.json"));
  CHECK(doc["config_hash"] == c.hash());
  CHECK(doc["records"].size() == 2 * 3);
  CHECK(slurp(a / "experiment.csv").find("±") != std::string::npos);
}

TEST_CASE("empty results still produce reports") {
  TempDir tmp("empty");
  ExperimentResults empty;
  empty.config_hash = "0000000000000000";
  emit_report(empty, tmp / "nested", "experiment");
  CHECK(json::parse(slurp(tmp / "nested" / "experiment.json"))["records"].empty());
  CHECK(slurp(tmp / "nested" / "experiment.csv").rfind("label,", 0) == 0);
}

TEST_CASE("sensitivity sweeps") {
  auto j = small_config();
  j["protocol"]["num_seeds"] = 1;
  j["protocol"]["k_folds"] = 1;
  j["calibration"] = json::array({{{"variant", "none"}}, {{"variant", "subtract"}}});
  CHECK_THROWS_AS(run_sensitivity(config_from(j)), ConfigError);

  j["rho_sweep"] = {3.0, 6.0};
  j["noise"] = {{"kind", "feature"}, {"levels", {0.0, 0.5}}, {"seed", 1}};
  const auto c = config_from(j);
  const auto sweep = run_sensitivity(c);
  REQUIRE(sweep.points.size() == 4);
  CHECK(sweep.points[0].variable == "rho");
  CHECK(sweep.points[2].variable == "feature_noise");

  // rho equal to the base config and a zero noise level both reproduce the baseline
  const auto baseline = run_experiment(c, load_experiment_dataset(c));
  for (int p : {0, 2}) {
    for (std::size_t a = 0; a < baseline.aggregates.size(); ++a) {
      CHECK(sweep.points[static_cast<std::size_t>(p)].results.aggregates[a].f1_macro.mean ==
            baseline.aggregates[a].f1_macro.mean);
    }
  }

  TempDir tmp("sweep");
  emit_sweep_report(sweep, tmp.path());
  const std::string svg = slurp(tmp / "sweep_rho.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("none@logits") != std::string::npos);
  CHECK(std::filesystem::exists(tmp / "sweep_feature_noise.svg"));
  const auto doc = json::parse(slurp(tmp / "sweep.json"));
  CHECK(doc["points"].size() == 4);
  CHECK_THROWS(render_sweep_svg(doc, "rho", "bogus"));
}

TEST_CASE("timing file") {
  TempDir tmp("timing");
  auto j = small_config();
  j["protocol"]["num_seeds"] = 1;
  j["protocol"]["k_folds"] = 1;
  const auto c = config_from(j);
  const auto r = run_experiment(c, load_experiment_dataset(c));
  emit_timing({&r}, tmp / "timing.json");
  const auto doc = json::parse(slurp(tmp / "timing.json"));
  REQUIRE(doc["runs"].size() == 1);
  CHECK(doc["runs"][0]["wall_time_seconds"].get<double>() > 0.0);
}

TEST_CASE("run time grows at most linearly with node count") {
  // expected degree held fixed so edges grow with n
  std::vector<double> seconds;
  const std::vector<int> sizes{1000, 2000, 4000};
  for (int n : sizes) {
    auto j = small_config();
    j["dataset"]["sbm"]["total_nodes"] = n;
    j["dataset"]["sbm"]["p_intra"] = 10.0 / n;
    j["dataset"]["sbm"]["p_inter"] = 1.0 / n;
    j["train"] = {{"max_epochs", 60}, {"patience", 60}};
    j["protocol"]["num_seeds"] = 1;
    j["protocol"]["k_folds"] = 1;
    j["calibration"] = json::array({{{"variant", "subtract"}}});
    const auto c = config_from(j);
    const auto r = run_experiment(c, load_experiment_dataset(c));
    REQUIRE(r.records.size() == 1);
    seconds.push_back(r.records[0].wall_time_seconds);
  }
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    const double growth = static_cast<double>(sizes[i]) / sizes[i - 1];
    MESSAGE("n=" << sizes[i] << " took " << seconds[i] << " s, previous " << seconds[i - 1] << " s");
    CHECK(seconds[i] <= 3.0 * growth * seconds[i - 1]);
  }
}
