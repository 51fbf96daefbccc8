#include "neubm/calibration.hpp"

#include "neubm/error.hpp"
#include "neubm/metrics.hpp"
#include "neubm/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace neubm {

std::string to_string(CalibrationVariant variant) {
  switch (variant) {
    case CalibrationVariant::None: return "none";
    case CalibrationVariant::Subtract: return "subtract";
    case CalibrationVariant::Scale: return "scale";
    case CalibrationVariant::Normalize: return "normalize";
  }
  return "none";
}

CalibrationVariant calibration_variant_from_string(const std::string& name) {
  if (name == "none") return CalibrationVariant::None;
  if (name == "subtract") return CalibrationVariant::Subtract;
  if (name == "scale") return CalibrationVariant::Scale;
  if (name == "normalize") return CalibrationVariant::Normalize;
  throw ConfigError("unknown calibration variant '" + name + "'");
}

std::string to_string(CalibrationPosition position) {
  return position == CalibrationPosition::Logits ? "logits" : "post_softmax";
}

CalibrationPosition calibration_position_from_string(const std::string& name) {
  if (name == "logits") return CalibrationPosition::Logits;
  if (name == "post_softmax") return CalibrationPosition::PostSoftmax;
  throw ConfigError("unknown calibration position '" + name + "'");
}

std::string CalibrationSpec::id() const {
  std::string s = to_string(variant);
  if (variant == CalibrationVariant::Scale) s += "(" + format_real(lambda) + ")";
  return s + "@" + to_string(position);
}

double population_std(const Vector& v) {
  if (v.size() == 0) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().mean());
}

namespace {

/// Applies the variant to a difference matrix in place.
void apply_variant(Matrix& diff, const Vector& reference, const CalibrationSpec& spec) {
  switch (spec.variant) {
    case CalibrationVariant::None:
    case CalibrationVariant::Subtract:
      break;
    case CalibrationVariant::Scale:
      diff *= spec.lambda;
      break;
    case CalibrationVariant::Normalize: {
      const double sigma = population_std(reference);
      if (!(sigma > 0.0)) {
        throw NumericError("degenerate neutral reference: standard deviation is zero, normalize is undefined");
      }
      diff /= sigma;
      break;
    }
  }
}

}  // namespace

CalibratedOutput calibrate(const Matrix& logits, const Vector& neutral_logits, const CalibrationSpec& spec) {
  if (logits.cols() != neutral_logits.size()) {
    throw DataError("logit width " + std::to_string(logits.cols()) + " does not match neutral vector length " +
                    std::to_string(neutral_logits.size()));
  }
  if (spec.variant == CalibrationVariant::Scale && !std::isfinite(spec.lambda)) {
    throw ConfigError("scale calibration needs a finite lambda");
  }
  CalibratedOutput out;
  if (spec.position == CalibrationPosition::Logits) {
    if (spec.variant == CalibrationVariant::None) {
      out.corrected_logits = logits;
    } else {
      out.corrected_logits = logits.rowwise() - neutral_logits.transpose();
      apply_variant(out.corrected_logits, neutral_logits, spec);
    }
    out.probabilities = softmax_rows(out.corrected_logits);
  } else {
    out.probabilities = softmax_rows(logits);
    if (spec.variant != CalibrationVariant::None) {
      const Vector neutral_probs = softmax_rows(neutral_logits.transpose()).row(0).transpose();
      Matrix diff = out.probabilities.rowwise() - neutral_probs.transpose();
      apply_variant(diff, neutral_probs, spec);
      diff = diff.cwiseMax(0.0);
      for (Index i = 0; i < diff.rows(); ++i) {
        const double total = diff.row(i).sum();
        if (!(total > 0.0)) {
          throw NumericError("post-softmax calibration collapsed row " + std::to_string(i) + " to all zeros");
        }
        diff.row(i) /= total;
      }
      out.probabilities = std::move(diff);
    }
  }
  out.predicted_labels = argmax_rows(out.probabilities);
  return out;
}

CalibratedOutput predict_calibrated(const ModelParams& params, const Graph& graph, const NeutralGraph& neutral,
                                    const CalibrationSpec& spec) {
  return calibrate(predict_logits(params, graph), neutral_logit_vector(params, neutral), spec);
}

BiasReductionReport check_bias_reduction(const Matrix& original_logits, const CalibratedOutput& before,
                                         const CalibratedOutput& after, const Vector& neutral_logits,
                                         int majority_class, int minority_class, std::span<const Index> rows) {
  const Index C = original_logits.cols();
  if (majority_class < 0 || majority_class >= C || minority_class < 0 || minority_class >= C) {
    throw DataError("majority/minority class out of range");
  }
  if (before.probabilities.rows() != after.probabilities.rows() ||
      before.probabilities.rows() != original_logits.rows()) {
    throw DataError("probability matrices cover different node sets");
  }
  std::vector<Index> all;
  if (rows.empty()) {
    all.resize(static_cast<std::size_t>(original_logits.rows()));
    for (Index i = 0; i < original_logits.rows(); ++i) all[static_cast<std::size_t>(i)] = i;
    rows = all;
  }
  BiasReductionReport r;
  r.majority_class = majority_class;
  r.minority_class = minority_class;
  r.class_shift = Vector::Zero(C);
  const bool has_corrected = after.corrected_logits.rows() == original_logits.rows();
  for (Index v : rows) {
    r.majority_prob_before += before.probabilities(v, majority_class);
    r.majority_prob_after += after.probabilities(v, majority_class);
    if (has_corrected) r.class_shift += (after.corrected_logits.row(v) - original_logits.row(v)).transpose();
  }
  const auto n = static_cast<double>(rows.size());
  r.majority_prob_before /= n;
  r.majority_prob_after /= n;
  r.class_shift /= n;
  r.premise_holds = neutral_logits(minority_class) < neutral_logits(majority_class);
  r.ordering_holds = r.class_shift(minority_class) > r.class_shift(majority_class);
  return r;
}

std::pair<int, int> majority_minority_classes(std::span<const int> labels, int num_classes,
                                              std::span<const Index> nodes) {
  std::vector<Index> counts(static_cast<std::size_t>(num_classes), 0);
  for (Index v : nodes) {
    const int y = labels[static_cast<std::size_t>(v)];
    if (y != kUnlabeled) ++counts[static_cast<std::size_t>(y)];
  }
  int majority = -1;
  int minority = -1;
  for (int c = 0; c < num_classes; ++c) {
    const Index k = counts[static_cast<std::size_t>(c)];
    if (k == 0) continue;
    if (majority < 0 || k > counts[static_cast<std::size_t>(majority)]) majority = c;
    if (minority < 0 || k < counts[static_cast<std::size_t>(minority)]) minority = c;
  }
  if (majority < 0) throw DataError("no labeled nodes to determine majority/minority classes");
  return {majority, minority};
}

void write_predictions_csv(const CalibratedOutput& output, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const Index C = output.probabilities.cols();
  out << "node_id,predicted_label";
  for (Index c = 0; c < C; ++c) out << ",p" << c;
  out << '\n';
  std::string line;
  for (Index i = 0; i < output.probabilities.rows(); ++i) {
    line = std::to_string(i) + "," + std::to_string(output.predicted_labels[static_cast<std::size_t>(i)]);
    for (Index c = 0; c < C; ++c) line += "," + format_real(output.probabilities(i, c));
    out << line << '\n';
  }
}

Predictions read_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("node_id,predicted_label")) {
    throw ParseError(path.string(), 1, "missing 'node_id,predicted_label,...' header");
  }
  const auto classes = static_cast<Index>(std::count(line.begin(), line.end(), ',')) - 1;
  Predictions p;
  std::vector<double> probs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (static_cast<Index>(cells.size()) != classes + 2) throw ParseError(path.string(), lineno, "wrong number of columns");
    auto id = parse_integer(cells[0]);
    auto label = parse_integer(cells[1]);
    if (!id || !label) throw ParseError(path.string(), lineno, "node_id and predicted_label must be integers");
    p.node_ids.push_back(*id);
    p.predicted_labels.push_back(static_cast<int>(*label));
    for (Index c = 0; c < classes; ++c) {
      auto v = parse_real(cells[static_cast<std::size_t>(c + 2)]);
      if (!v) throw ParseError(path.string(), lineno, "probability is not a real number");
      probs.push_back(*v);
    }
  }
  p.probabilities = Eigen::Map<Matrix>(probs.data(), static_cast<Index>(p.node_ids.size()), classes);
  return p;
}

}  // namespace neubm
