// Exercises the shared library through the C header only.
#include "neubm/neubm.h"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path root;
  Scratch() {
    root = fs::temp_directory_path() / ("neubm_capi_" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  std::string operator/(const std::string& name) const { return (root / name).string(); }
};

json take(char* s) {
  REQUIRE(s != nullptr);
  json j = json::parse(s);
  neubm_string_free(s);
  return j;
}

const char* kSbm = R"({"num_classes": 3, "total_nodes": 120, "rho": 4, "p_intra": 0.1, "p_inter": 0.01,
                        "feature_dim": 6, "class_mean_separation": 2.0, "seed": 5})";

}  // namespace

TEST_CASE("version and error plumbing") {
  CHECK(std::string(neubm_version()).size() > 0);
  neubm_graph* g = nullptr;
  CHECK(neubm_graph_load("/nonexistent/neubm", &g) == NEUBM_ERR_IO);
  CHECK(g == nullptr);
  CHECK(std::string(neubm_last_error()).find("/nonexistent/neubm") != std::string::npos);
  CHECK(neubm_graph_generate_sbm("{not json", &g) == NEUBM_ERR_CONFIG);
  CHECK(neubm_graph_generate_sbm(R"({"bogus": 1})", &g) == NEUBM_ERR_CONFIG);
  CHECK(neubm_graph_generate_sbm(kSbm, nullptr) != NEUBM_OK);
  CHECK(neubm_graph_num_nodes(nullptr) == 0);
  neubm_graph_free(nullptr);
  neubm_model_free(nullptr);
}

TEST_CASE("graph, train, calibrate and evaluate") {
  Scratch tmp;
  neubm_graph* g = nullptr;
  REQUIRE(neubm_graph_generate_sbm(kSbm, &g) == NEUBM_OK);
  CHECK(neubm_graph_num_nodes(g) == 120);
  CHECK(neubm_graph_num_classes(g) == 3);
  REQUIRE(neubm_graph_split(g, 0.2, 0.1, 2, 7) == NEUBM_OK);
  CHECK(neubm_graph_split(g, 0.9, 0.5, 2, 7) == NEUBM_ERR_CONFIG);

  char* text = nullptr;
  REQUIRE(neubm_graph_stats_json(g, &text) == NEUBM_OK);
  const json stats = take(text);
  CHECK(stats["nodes"] == 120);
  CHECK(stats["rho"].get<double>() == doctest::Approx(4.0).epsilon(0.2));
  CHECK(stats["masks"]["train"].get<int>() > 0);

  REQUIRE(neubm_graph_save(g, (tmp / "data").c_str()) == NEUBM_OK);
  neubm_graph* loaded = nullptr;
  REQUIRE(neubm_graph_load((tmp / "data").c_str(), &loaded) == NEUBM_OK);
  CHECK(neubm_graph_num_nodes(loaded) == 120);

  neubm_model* m = nullptr;
  const char* cfg = R"({"model": {"hidden_dim": 8}, "train": {"max_epochs": 40, "patience": 10}})";
  REQUIRE(neubm_train(g, cfg, &m, &text) == NEUBM_OK);
  const json report = take(text);
  CHECK(report["epochs_run"].get<int>() >= 1);
  CHECK(neubm_model_num_classes(m) == 3);

  std::vector<double> logits(120 * 3);
  CHECK(neubm_model_logits(m, g, logits.data(), 10) != NEUBM_OK);
  REQUIRE(neubm_model_logits(m, g, logits.data(), logits.size()) == NEUBM_OK);

  REQUIRE(neubm_model_save(m, (tmp / "model.json").c_str()) == NEUBM_OK);
  neubm_model* m2 = nullptr;
  REQUIRE(neubm_model_load((tmp / "model.json").c_str(), &m2) == NEUBM_OK);
  std::vector<double> logits2(logits.size());
  REQUIRE(neubm_model_logits(m2, loaded, logits2.data(), logits2.size()) == NEUBM_OK);
  CHECK(logits == logits2);

  const std::string preds = tmp / "pred.csv";
  REQUIRE(neubm_calibrate(m, g, R"({"calibration": {"variant": "subtract"}, "neutral": {"seed": 3}})",
                          preds.c_str(), &text) == NEUBM_OK);
  const json summary = take(text);
  CHECK(summary["spec"] == "subtract@logits");
  CHECK(summary["neutral_logits"].size() == 3);
  CHECK(summary["bias"].contains("majority_prob_after"));

  REQUIRE(neubm_evaluate(preds.c_str(), g, "test", &text) == NEUBM_OK);
  const json metrics = take(text);
  CHECK(metrics["f1_macro"].get<double>() >= 0.0);
  CHECK(metrics["f1_micro"] == metrics["accuracy"]);
  CHECK(neubm_evaluate(preds.c_str(), g, "nope", &text) == NEUBM_ERR_DATA);

  neubm_model_free(m2);
  neubm_model_free(m);
  neubm_graph_free(loaded);
  neubm_graph_free(g);
}

TEST_CASE("pure calibration and mmd") {
  const double logits[] = {2.0, 0.0};
  const double neutral[] = {1.0, 0.0};
  double probs[2];
  int label = -1;
  REQUIRE(neubm_calibrate_logits(logits, 1, 2, neutral, R"({"variant": "subtract"})", probs, &label) == NEUBM_OK);
  CHECK(probs[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(label == 0);
  const double flat[] = {1.0, 1.0};
  CHECK(neubm_calibrate_logits(logits, 1, 2, flat, R"({"variant": "normalize"})", probs, nullptr) ==
        NEUBM_ERR_NUMERIC);

  const double x[] = {0.0};
  const double y[] = {1.0};
  double d = 0.0;
  REQUIRE(neubm_mmd_rbf(x, 1, y, 1, 1, 1.0 / std::sqrt(2.0), &d) == NEUBM_OK);
  CHECK(d == doctest::Approx(std::sqrt(2.0 - 2.0 * std::exp(-1.0))));
}

TEST_CASE("experiment run and plot") {
  Scratch tmp;
  json cfg = {{"dataset", {{"sbm", json::parse(kSbm)}}},
              {"model", {{"hidden_dim", 8}}},
              {"train", {{"max_epochs", 20}, {"patience", 5}}},
              {"protocol", {{"num_seeds", 1}, {"k_folds", 1}, {"min_per_class", 2}, {"train_frac", 0.2}}},
              {"rho_sweep", {2.0, 4.0}}};
  char* text = nullptr;
  REQUIRE(neubm_run(cfg.dump().c_str(), "experiment", (tmp / "exp").c_str(), (tmp / "t.json").c_str(), &text) ==
          NEUBM_OK);
  const json summary = take(text);
  CHECK(summary["aggregates"].size() == 2);
  CHECK(fs::exists(tmp / "exp/experiment.csv"));
  CHECK(fs::exists(tmp / "t.json"));

  REQUIRE(neubm_run(cfg.dump().c_str(), "sweep", (tmp / "sw").c_str(), nullptr, nullptr) == NEUBM_OK);
  REQUIRE(neubm_plot((tmp / "sw/sweep.json").c_str(), "rho", "accuracy", (tmp / "p.svg").c_str()) == NEUBM_OK);
  CHECK(fs::file_size(tmp / "p.svg") > 100);
  CHECK(neubm_plot((tmp / "sw/sweep.json").c_str(), "feature_noise", nullptr, (tmp / "q.svg").c_str()) ==
        NEUBM_ERR_DATA);
  CHECK(neubm_run(cfg.dump().c_str(), "dance", nullptr, nullptr, nullptr) == NEUBM_ERR_CONFIG);
}
