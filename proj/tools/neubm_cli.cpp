// Command-line front end. Talks to the library only through neubm.h.

#include "neubm/neubm.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kOutputRootEnv = "NEUBM_OUTPUT_ROOT";

struct CliFailure {
  int code;
  std::string message;
};

void check(neubm_status status) {
  if (status != NEUBM_OK) throw CliFailure{static_cast<int>(status), neubm_last_error()};
}

// Relative output paths land under $NEUBM_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& path) {
  const char* root = std::getenv(kOutputRootEnv);
  fs::path p(path);
  if (root && *root && p.is_relative()) p = fs::path(root) / p;
  return p;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
    if (ec) throw CliFailure{NEUBM_ERR_IO, "cannot create " + file.parent_path().string()};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliFailure{NEUBM_ERR_IO, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliFailure{NEUBM_ERR_IO, "cannot write " + path.string()};
  out << text;
}

json parse_config(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw CliFailure{NEUBM_ERR_CONFIG, source + ": " + e.what()};
  }
}

// Takes ownership of a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  neubm_string_free(s);
  return out;
}

struct GraphHandle {
  neubm_graph* g = nullptr;
  ~GraphHandle() { neubm_graph_free(g); }
};

struct ModelHandle {
  neubm_model* m = nullptr;
  ~ModelHandle() { neubm_model_free(m); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neutral-graph bias mitigation for node classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", neubm_version());

  // gen
  auto* gen = app.add_subcommand("gen", "Generate an SBM dataset in the canonical format");
  std::string gen_out, gen_config;
  json sbm = json::object();
  int classes = 5;
  long long nodes = 2000, feature_dim = 16;
  double rho = 10, p_intra = 0.01, p_inter = 0.001, separation = 1.0, feature_std = 1.0;
  unsigned long long gen_seed = 0;
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  gen->add_option("--config", gen_config, "SBM config JSON (overrides the flags)");
  gen->add_option("--classes", classes)->capture_default_str();
  gen->add_option("--nodes", nodes)->capture_default_str();
  gen->add_option("--rho", rho, "Largest / smallest class size")->capture_default_str();
  gen->add_option("--p-intra", p_intra)->capture_default_str();
  gen->add_option("--p-inter", p_inter)->capture_default_str();
  gen->add_option("--features", feature_dim)->capture_default_str();
  gen->add_option("--separation", separation, "Class mean separation")->capture_default_str();
  gen->add_option("--feature-std", feature_std)->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();

  // stats
  auto* stats = app.add_subcommand("stats", "Summarize a dataset (sizes, class counts, rho)");
  std::string stats_data;
  bool stats_json = false;
  stats->add_option("--data", stats_data, "Dataset directory")->required();
  stats->add_flag("--json", stats_json, "Print the full JSON summary");

  // train
  auto* train = app.add_subcommand("train", "Train a GCN/GAT and write a checkpoint");
  std::string train_data, train_config, train_out, train_report;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--config", train_config, "JSON with model/train/protocol sections");
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--report", train_report, "Training report JSON path");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Apply neutral-graph calibration and write predictions");
  std::string cal_model, cal_data, cal_out, cal_config, cal_variant = "subtract", cal_position = "logits",
                                                         cal_neutral = "mean_cov", cal_scope = "all_nodes";
  std::optional<double> cal_lambda;
  unsigned long long cal_seed = 0;
  cal->add_option("--model", cal_model, "Checkpoint path")->required();
  cal->add_option("--data", cal_data, "Dataset directory")->required();
  cal->add_option("--out", cal_out, "Predictions CSV path")->required();
  cal->add_option("--config", cal_config, "JSON with calibration/neutral sections (overrides the flags)");
  cal->add_option("--variant", cal_variant, "none | subtract | scale | normalize")->capture_default_str();
  cal->add_option("--position", cal_position, "logits | post_softmax")->capture_default_str();
  cal->add_option("--lambda", cal_lambda, "Scale factor for the scale variant");
  cal->add_option("--neutral", cal_neutral, "mean_cov | random | class_balanced")->capture_default_str();
  cal->add_option("--stats-scope", cal_scope, "all_nodes | train_mask")->capture_default_str();
  cal->add_option("--seed", cal_seed, "Neutral graph seed")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions against dataset labels");
  std::string eval_preds, eval_data, eval_mask = "test", eval_out;
  eval->add_option("--predictions", eval_preds, "Predictions CSV")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--mask", eval_mask, "Mask to score, or all for every labeled node")->capture_default_str();
  eval->add_option("--out", eval_out, "Metrics JSON path (stdout when omitted)");

  // experiment / ablate / sweep
  std::string run_config, run_out, run_timing;
  auto add_run = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", run_config, "Experiment config JSON")->required();
    sub->add_option("--out", run_out, "Report directory (default: the config's output_dir)");
    sub->add_option("--timing", run_timing, "Also write per-run wall times to this JSON file");
    return sub;
  };
  auto* experiment = add_run("experiment", "Seeds x folds x calibration specs, with aggregate reports");
  auto* ablate = add_run("ablate", "Neutral-variant, calibration-variant and position ablations");
  auto* sweep = add_run("sweep", "Imbalance-ratio and noise sensitivity sweeps");

  // plot
  auto* plot = app.add_subcommand("plot", "Render an SVG line chart from sweep.json");
  std::string plot_in, plot_variable, plot_metric = "f1_macro", plot_out;
  plot->add_option("--sweep", plot_in, "sweep.json written by the sweep command")->required();
  plot->add_option("--variable", plot_variable, "rho | feature_noise | structural_noise")->required();
  plot->add_option("--metric", plot_metric, "f1_macro | f1_weighted | f1_micro | accuracy")->capture_default_str();
  plot->add_option("--out", plot_out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : NEUBM_ERR_CONFIG;
  }

  try {
    if (gen->parsed()) {
      if (!gen_config.empty()) {
        sbm = parse_config(read_file(gen_config), gen_config);
      } else {
        sbm = {{"num_classes", classes},   {"total_nodes", nodes},  {"rho", rho},
               {"p_intra", p_intra},       {"p_inter", p_inter},    {"feature_dim", feature_dim},
               {"class_mean_separation", separation}, {"feature_std", feature_std}, {"seed", gen_seed}};
      }
      GraphHandle g;
      check(neubm_graph_generate_sbm(sbm.dump().c_str(), &g.g));
      const fs::path out = output_path(gen_out);
      check(neubm_graph_save(g.g, out.string().c_str()));
      const json s = parse_config(take([&] {
        char* text = nullptr;
        check(neubm_graph_stats_json(g.g, &text));
        return text;
      }()), "stats");
      std::cout << s.at("summary").get<std::string>() << "\nwrote " << out.string() << "\n";
    } else if (stats->parsed()) {
      GraphHandle g;
      check(neubm_graph_load(stats_data.c_str(), &g.g));
      char* text = nullptr;
      check(neubm_graph_stats_json(g.g, &text));
      const json s = parse_config(take(text), "stats");
      if (stats_json) {
        std::cout << s.dump(2) << "\n";
      } else {
        std::cout << s.at("summary").get<std::string>() << "\n";
        std::cout << "class counts:";
        for (const auto& c : s.at("class_counts")) std::cout << " " << c.get<long long>();
        std::cout << "\nmin/max class count: " << s.at("min_class_count") << "/" << s.at("max_class_count")
                  << "  rho (max/min) = " << s.at("rho").get<double>()
                  << "  rho (min/max) = " << s.at("rho_inverse").get<double>() << "\n";
      }
    } else if (train->parsed()) {
      const std::string config = train_config.empty() ? "{}" : read_file(train_config);
      GraphHandle g;
      check(neubm_graph_load(train_data.c_str(), &g.g));
      ModelHandle m;
      char* report = nullptr;
      check(neubm_train(g.g, config.c_str(), &m.m, &report));
      const std::string report_text = take(report);
      const fs::path out = output_path(train_out);
      ensure_parent(out);
      check(neubm_model_save(m.m, out.string().c_str()));
      if (!train_report.empty()) write_file(output_path(train_report), report_text + "\n");
      const json r = parse_config(report_text, "report");
      std::cout << "trained " << r.at("epochs_run") << " epochs, best epoch " << r.at("best_epoch") << "\nwrote "
                << out.string() << "\n";
    } else if (cal->parsed()) {
      json options;
      if (!cal_config.empty()) {
        options = parse_config(read_file(cal_config), cal_config);
      } else {
        json spec = {{"variant", cal_variant}, {"position", cal_position}};
        if (cal_lambda) spec["lambda"] = *cal_lambda;
        options = {{"calibration", spec},
                   {"neutral", {{"construction_variant", cal_neutral}, {"stats_scope", cal_scope}, {"seed", cal_seed}}}};
      }
      GraphHandle g;
      check(neubm_graph_load(cal_data.c_str(), &g.g));
      ModelHandle m;
      check(neubm_model_load(cal_model.c_str(), &m.m));
      const fs::path out = output_path(cal_out);
      ensure_parent(out);
      char* summary = nullptr;
      check(neubm_calibrate(m.m, g.g, options.dump().c_str(), out.string().c_str(), &summary));
      std::cout << take(summary) << "\nwrote " << out.string() << "\n";
    } else if (eval->parsed()) {
      GraphHandle g;
      check(neubm_graph_load(eval_data.c_str(), &g.g));
      char* metrics = nullptr;
      check(neubm_evaluate(eval_preds.c_str(), g.g, eval_mask == "all" ? "" : eval_mask.c_str(), &metrics));
      const std::string text = take(metrics) + "\n";
      if (eval_out.empty()) {
        std::cout << text;
      } else {
        write_file(output_path(eval_out), text);
      }
    } else if (experiment->parsed() || ablate->parsed() || sweep->parsed()) {
      const char* mode = experiment->parsed() ? "experiment" : ablate->parsed() ? "ablate" : "sweep";
      const std::string text = read_file(run_config);
      const json config = parse_config(text, run_config);
      std::string dir = run_out;
      if (dir.empty()) dir = config.value("output_dir", std::string("results"));
      const fs::path out = output_path(dir);
      std::string timing;
      if (!run_timing.empty()) {
        timing = output_path(run_timing).string();
        ensure_parent(timing);
      }
      char* summary = nullptr;
      check(neubm_run(text.c_str(), mode, out.string().c_str(), timing.empty() ? nullptr : timing.c_str(), &summary));
      const json s = parse_config(take(summary), "summary");
      auto print_rows = [](const json& aggregates) {
        for (const auto& a : aggregates) {
          std::cout << "  " << a.at("label").get<std::string>() << "  f1_macro "
                    << a.at("f1_macro").at("display").get<std::string>() << "  f1_weighted "
                    << a.at("f1_weighted").at("display").get<std::string>() << "  f1_micro "
                    << a.at("f1_micro").at("display").get<std::string>()
                    << (a.at("complete").get<bool>() ? "" : "  (incomplete)") << "\n";
        }
      };
      if (s.contains("points")) {
        for (const auto& p : s.at("points")) {
          std::cout << p.at("variable").get<std::string>() << " = " << p.at("value").get<double>() << "\n";
          print_rows(p.at("aggregates"));
        }
      } else {
        print_rows(s.at("aggregates"));
      }
      std::cout << "reports in " << out.string() << "\n";
    } else if (plot->parsed()) {
      const fs::path out = output_path(plot_out);
      ensure_parent(out);
      check(neubm_plot(plot_in.c_str(), plot_variable.c_str(), plot_metric.c_str(), out.string().c_str()));
      std::cout << "wrote " << out.string() << "\n";
    }
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
