#include "neubm/neubm.h"

#include "neubm/calibration.hpp"
#include "neubm/dataset.hpp"
#include "neubm/error.hpp"
#include "neubm/experiment.hpp"
#include "neubm/gnn.hpp"
#include "neubm/metrics.hpp"
#include "neubm/neutral.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <new>
#include <string>

struct neubm_graph {
  neubm::Graph graph;
};

struct neubm_model {
  neubm::ModelParams params;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

neubm_status fail(neubm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename F>
neubm_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return NEUBM_OK;
  } catch (const neubm::Error& e) {
    return fail(static_cast<neubm_status>(static_cast<int>(e.category())), e.what());
  } catch (const json::exception& e) {
    return fail(NEUBM_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(NEUBM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NEUBM_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw neubm::ConfigError(std::string(what) + " must not be null");
}

json parse_json(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw neubm::ConfigError(std::string("malformed ") + what + ": " + e.what());
  }
}

json section(const json& j, const char* key) { return j.contains(key) ? j.at(key) : json::object(); }

json vector_json(const neubm::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

extern "C" {

const char* neubm_version(void) { return "1.0.0"; }

const char* neubm_last_error(void) { return g_last_error.c_str(); }

void neubm_string_free(char* s) { std::free(s); }

neubm_status neubm_graph_load(const char* dir, neubm_graph** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new neubm_graph{neubm::load_canonical(dir)};
  });
}

neubm_status neubm_graph_generate_sbm(const char* sbm_json, neubm_graph** out) {
  return guarded([&] {
    require(out, "out");
    const auto config = neubm::parse_sbm_config(parse_json(sbm_json, "SBM config"));
    *out = new neubm_graph{neubm::generate_sbm(config)};
  });
}

neubm_status neubm_graph_save(const neubm_graph* graph, const char* dir) {
  return guarded([&] {
    require(graph, "graph");
    require(dir, "dir");
    neubm::save_canonical(graph->graph, dir);
  });
}

neubm_status neubm_graph_stats_json(const neubm_graph* graph, char** out_json) {
  return guarded([&] {
    require(graph, "graph");
    require(out_json, "out_json");
    const auto& g = graph->graph;
    const auto s = neubm::summarize(g);
    const double pairs = static_cast<double>(g.num_nodes) * static_cast<double>(g.num_nodes - 1) / 2.0;
    json j = {{"summary", s.line()},
              {"nodes", s.nodes},
              {"edges", s.edges},
              {"features", s.features},
              {"classes", s.classes},
              {"labeled", s.labeled},
              {"class_counts", s.class_counts},
              {"min_class_count", s.min_class_count},
              {"max_class_count", s.max_class_count},
              {"rho", s.rho},
              {"rho_inverse", s.rho_inverse},
              {"edge_density", pairs > 0 ? static_cast<double>(s.edges) / pairs : 0.0}};
    json masks = json::object();
    for (const auto& [name, nodes] : g.masks) masks[name] = nodes.size();
    j["masks"] = masks;
    *out_json = copy_string(j.dump(2));
  });
}

neubm_status neubm_graph_split(neubm_graph* graph, double train_frac, double val_frac, int64_t min_per_class,
                               uint64_t seed) {
  return guarded([&] {
    require(graph, "graph");
    neubm::stratified_split(graph->graph, train_frac, val_frac, min_per_class, seed).apply_to(graph->graph);
  });
}

int64_t neubm_graph_num_nodes(const neubm_graph* graph) { return graph ? graph->graph.num_nodes : 0; }

int neubm_graph_num_classes(const neubm_graph* graph) { return graph ? graph->graph.num_classes : 0; }

void neubm_graph_free(neubm_graph* graph) { delete graph; }

neubm_status neubm_train(const neubm_graph* graph, const char* config_json, neubm_model** out, char** report_json) {
  return guarded([&] {
    require(graph, "graph");
    require(out, "out");
    const json config = parse_json(config_json, "train config");
    auto model = neubm::parse_model_config(section(config, "model"));
    const auto train = neubm::parse_train_config(section(config, "train"));
    const auto protocol = neubm::parse_protocol_config(section(config, "protocol"));
    const auto& g = graph->graph;
    model.input_dim = g.num_features();
    model.num_classes = g.num_classes;

    neubm::SplitAssignment split;
    if (g.masks.count("train")) {
      split.train = g.masks.at("train");
      if (g.masks.count("val")) split.val = g.masks.at("val");
      if (g.masks.count("test")) split.test = g.masks.at("test");
    } else {
      split = neubm::stratified_split(g, protocol.train_frac, protocol.val_frac, protocol.min_per_class,
                                      protocol.base_seed);
    }
    auto result = neubm::train(g, split, model, train);
    if (report_json) {
      const auto& r = result.report;
      json j = {{"epochs_run", r.epochs_run},
                {"best_epoch", r.best_epoch},
                {"loss_curve", r.loss_curve},
                {"val_metric_curve", r.val_metric_curve},
                {"wall_time_seconds", r.wall_time_seconds},
                {"train_nodes", split.train.size()},
                {"val_nodes", split.val.size()}};
      *report_json = copy_string(j.dump(2));
    }
    *out = new neubm_model{std::move(result.params)};
  });
}

neubm_status neubm_model_save(const neubm_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    neubm::save_checkpoint(model->params, path);
  });
}

neubm_status neubm_model_load(const char* path, neubm_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new neubm_model{neubm::load_checkpoint(path)};
  });
}

int neubm_model_num_classes(const neubm_model* model) { return model ? model->params.config.num_classes : 0; }

neubm_status neubm_model_logits(const neubm_model* model, const neubm_graph* graph, double* out, size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(graph, "graph");
    require(out, "out");
    const neubm::Matrix logits = neubm::predict_logits(model->params, graph->graph);
    if (capacity < static_cast<size_t>(logits.size())) {
      throw neubm::ConfigError("output buffer holds " + std::to_string(capacity) + " values, " +
                               std::to_string(logits.size()) + " needed");
    }
    std::memcpy(out, logits.data(), sizeof(double) * static_cast<size_t>(logits.size()));
  });
}

void neubm_model_free(neubm_model* model) { delete model; }

neubm_status neubm_calibrate(const neubm_model* model, const neubm_graph* graph, const char* options_json,
                             const char* predictions_csv, char** summary_json) {
  return guarded([&] {
    require(model, "model");
    require(graph, "graph");
    require(predictions_csv, "predictions_csv");
    const json options = parse_json(options_json, "calibration options");
    for (const auto& [key, _] : options.items()) {
      if (key != "calibration" && key != "neutral") throw neubm::ConfigError("unknown key '" + key + "' in options");
    }
    const json spec_json = options.contains("calibration") ? options.at("calibration") : json{{"variant", "subtract"}};
    const auto spec = neubm::parse_calibration_spec(spec_json);
    neubm::StatsScope scope = neubm::StatsScope::AllNodes;
    const auto neutral_config = neubm::parse_neutral_config(section(options, "neutral"), &scope);

    const auto& g = graph->graph;
    const auto stats = neubm::compute_dataset_stats(g, scope);
    const auto neutral = neubm::construct_neutral(stats, &g, neutral_config);
    const neubm::Vector reference = neubm::neutral_logit_vector(model->params, neutral);
    const neubm::Matrix logits = neubm::predict_logits(model->params, g);
    const auto out = neubm::calibrate(logits, reference, spec);
    neubm::write_predictions_csv(out, predictions_csv);

    if (summary_json) {
      json j = {{"spec", spec.id()},
                {"neutral_variant", neubm::to_string(neutral_config.construction_variant)},
                {"neutral_nodes", neutral.graph.num_nodes},
                {"neutral_edges", neutral.graph.edges.size()},
                {"neutral_logits", vector_json(reference)}};
      if (g.has_labels()) {
        std::vector<neubm::Index> nodes = g.masks.count("train") ? g.masks.at("train") : std::vector<neubm::Index>{};
        if (nodes.empty()) {
          for (neubm::Index v = 0; v < g.num_nodes; ++v) nodes.push_back(v);
        }
        const auto [maj, min] = neubm::majority_minority_classes(g.labels, g.num_classes, nodes);
        const auto before = neubm::calibrate(logits, reference, neubm::CalibrationSpec::none());
        const auto bias = neubm::check_bias_reduction(logits, before, out, reference, maj, min);
        j["bias"] = {{"majority_class", bias.majority_class},
                     {"minority_class", bias.minority_class},
                     {"majority_prob_before", bias.majority_prob_before},
                     {"majority_prob_after", bias.majority_prob_after},
                     {"class_shift", vector_json(bias.class_shift)},
                     {"premise_holds", bias.premise_holds},
                     {"ordering_holds", bias.ordering_holds}};
      }
      *summary_json = copy_string(j.dump(2));
    }
  });
}

neubm_status neubm_calibrate_logits(const double* logits, size_t rows, size_t classes, const double* neutral_logits,
                                    const char* spec_json, double* out_probs, int* out_labels) {
  return guarded([&] {
    require(logits, "logits");
    require(neutral_logits, "neutral_logits");
    const auto spec = neubm::parse_calibration_spec(parse_json(spec_json, "calibration spec"));
    const auto r = static_cast<neubm::Index>(rows);
    const auto c = static_cast<neubm::Index>(classes);
    const neubm::Matrix l = Eigen::Map<const neubm::Matrix>(logits, r, c);
    const neubm::Vector n = Eigen::Map<const neubm::Vector>(neutral_logits, c);
    const auto out = neubm::calibrate(l, n, spec);
    if (out_probs) std::memcpy(out_probs, out.probabilities.data(), sizeof(double) * rows * classes);
    if (out_labels) std::copy(out.predicted_labels.begin(), out.predicted_labels.end(), out_labels);
  });
}

neubm_status neubm_evaluate(const char* predictions_csv, const neubm_graph* graph, const char* mask,
                            char** metrics_json) {
  return guarded([&] {
    require(predictions_csv, "predictions_csv");
    require(graph, "graph");
    require(metrics_json, "metrics_json");
    const auto& g = graph->graph;
    if (!g.has_labels()) throw neubm::DataError("the dataset has no labels to evaluate against");
    const auto preds = neubm::read_predictions_csv(predictions_csv);
    std::vector<int> pred(static_cast<size_t>(g.num_nodes), neubm::kUnlabeled);
    std::vector<bool> seen(static_cast<size_t>(g.num_nodes), false);
    for (size_t i = 0; i < preds.node_ids.size(); ++i) {
      const auto v = preds.node_ids[i];
      if (v < 0 || v >= g.num_nodes) {
        throw neubm::DataError("prediction for node " + std::to_string(v) + " which is not in the dataset");
      }
      const int label = preds.predicted_labels[i];
      if (label < 0 || label >= g.num_classes) {
        throw neubm::DataError("predicted label " + std::to_string(label) + " is out of range");
      }
      pred[static_cast<size_t>(v)] = label;
      seen[static_cast<size_t>(v)] = true;
    }
    std::vector<neubm::Index> nodes;
    if (mask && *mask) {
      auto it = g.masks.find(mask);
      if (it == g.masks.end()) throw neubm::DataError(std::string("dataset has no '") + mask + "' mask");
      nodes = it->second;
    } else {
      for (neubm::Index v = 0; v < g.num_nodes; ++v) {
        if (g.labels[static_cast<size_t>(v)] != neubm::kUnlabeled) nodes.push_back(v);
      }
    }
    for (auto v : nodes) {
      if (!seen[static_cast<size_t>(v)]) throw neubm::DataError("no prediction for node " + std::to_string(v));
      if (g.labels[static_cast<size_t>(v)] == neubm::kUnlabeled) {
        throw neubm::DataError("node " + std::to_string(v) + " in the evaluation mask is unlabeled");
      }
    }
    auto report = neubm::f1_scores(neubm::confusion(pred, g.labels, g.num_classes, nodes));
    report.rho = neubm::imbalance_ratio(g.labels, nodes);
    *metrics_json = copy_string(neubm::metrics_to_json(report).dump(2));
  });
}

neubm_status neubm_mmd_rbf(const double* x, size_t nx, const double* y, size_t ny, size_t dim, double bandwidth,
                           double* out) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    require(out, "out");
    const auto d = static_cast<neubm::Index>(dim);
    const neubm::Matrix mx = Eigen::Map<const neubm::Matrix>(x, static_cast<neubm::Index>(nx), d);
    const neubm::Matrix my = Eigen::Map<const neubm::Matrix>(y, static_cast<neubm::Index>(ny), d);
    *out = neubm::mmd_rbf(mx, my, bandwidth > 0.0 ? std::optional<double>(bandwidth) : std::nullopt);
  });
}

neubm_status neubm_run(const char* config_json, const char* mode, const char* output_dir, const char* timing_path,
                       char** summary_json) {
  return guarded([&] {
    require(config_json, "config_json");
    require(mode, "mode");
    const auto config = neubm::ExperimentConfig::from_json(parse_json(config_json, "experiment config"));
    const std::filesystem::path dir = std::filesystem::path(output_dir ? std::string(output_dir) : config.output_dir);
    const std::string m = mode;
    json summary;
    if (m == "experiment" || m == "ablate") {
      const neubm::Graph data = neubm::load_experiment_dataset(config);
      const auto results = m == "experiment" ? neubm::run_experiment(config, data) : neubm::run_ablations(config, data);
      neubm::emit_report(results, dir, m == "experiment" ? "experiment" : "ablation");
      if (timing_path) neubm::emit_timing({&results}, timing_path);
      summary = neubm::results_to_json(results);
      summary.erase("records");
    } else if (m == "sweep") {
      const auto sweep = neubm::run_sensitivity(config);
      neubm::emit_sweep_report(sweep, dir);
      if (timing_path) {
        std::vector<const neubm::ExperimentResults*> parts;
        for (const auto& p : sweep.points) parts.push_back(&p.results);
        neubm::emit_timing(parts, timing_path);
      }
      summary = neubm::sweep_to_json(sweep);
    } else {
      throw neubm::ConfigError("unknown run mode '" + m + "' (expected experiment, ablate or sweep)");
    }
    if (summary_json) *summary_json = copy_string(summary.dump(2));
  });
}

neubm_status neubm_plot(const char* sweep_json_path, const char* variable, const char* metric, const char* out_svg) {
  return guarded([&] {
    require(sweep_json_path, "sweep_json_path");
    require(variable, "variable");
    require(out_svg, "out_svg");
    std::ifstream in(sweep_json_path);
    if (!in) throw neubm::IoError(std::string("cannot open ") + sweep_json_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw neubm::DataError(std::string(sweep_json_path) + ": " + e.what());
    }
    const std::string metric_name = metric && *metric ? metric : "f1_macro";
    bool found = false;
    for (const auto& p : doc.at("points")) found = found || p.at("variable") == variable;
    if (!found) throw neubm::DataError(std::string("sweep has no points for variable '") + variable + "'");
    const std::string svg = neubm::render_sweep_svg(doc, variable, metric_name);
    std::ofstream out(out_svg, std::ios::binary | std::ios::trunc);
    if (!out) throw neubm::IoError(std::string("cannot write ") + out_svg);
    out << svg;
  });
}

}  // extern "C"
