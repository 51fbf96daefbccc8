#pragma once

#include "neubm/gnn.hpp"
#include "neubm/graph.hpp"
#include "neubm/neutral.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace neubm {

enum class CalibrationVariant { None, Subtract, Scale, Normalize };
enum class CalibrationPosition { Logits, PostSoftmax };

std::string to_string(CalibrationVariant variant);
CalibrationVariant calibration_variant_from_string(const std::string& name);
std::string to_string(CalibrationPosition position);
CalibrationPosition calibration_position_from_string(const std::string& name);

struct CalibrationSpec {
  CalibrationVariant variant = CalibrationVariant::Subtract;
  CalibrationPosition position = CalibrationPosition::Logits;
  double lambda = 1.0;  // scale only

  static CalibrationSpec none() { return {CalibrationVariant::None}; }
  static CalibrationSpec subtract() { return {CalibrationVariant::Subtract}; }
  static CalibrationSpec scale(double lambda) { return {CalibrationVariant::Scale, CalibrationPosition::Logits, lambda}; }
  static CalibrationSpec normalize() { return {CalibrationVariant::Normalize}; }

  /// Stable identifier, e.g. "subtract@logits" or "scale(0.75)@logits".
  std::string id() const;
};

struct CalibratedOutput {
  Matrix probabilities;
  std::vector<int> predicted_labels;
  Matrix corrected_logits;  // empty for the post-softmax position
};

/// Applies the bias calibration f(L, L_neutral) to every row of `logits`.
///
/// Logits position: softmax(f(L - L_neutral)) with f the identity (subtract),
/// a scale by lambda, or a division by the population standard deviation of
/// L_neutral (normalize). Post-softmax position: softmax(L) minus
/// softmax(L_neutral), transformed the same way, negatives clamped to zero and
/// each row renormalized. Argmax ties go to the lowest class index.
CalibratedOutput calibrate(const Matrix& logits, const Vector& neutral_logits, const CalibrationSpec& spec);

/// calibrate(predict_logits(params, graph), neutral_logit_vector(params, neutral), spec)
CalibratedOutput predict_calibrated(const ModelParams& params, const Graph& graph, const NeutralGraph& neutral,
                                    const CalibrationSpec& spec);

/// Population standard deviation of the entries of v.
double population_std(const Vector& v);

struct BiasReductionReport {
  int majority_class = 0;
  int minority_class = 0;
  double majority_prob_before = 0.0;
  double majority_prob_after = 0.0;
  Vector class_shift;  ///< mean (corrected - original) logit per class
  bool premise_holds = false;   ///< neutral[minority] < neutral[majority]
  bool ordering_holds = false;  ///< class_shift[minority] > class_shift[majority]

  bool majority_prob_decreased() const { return majority_prob_after < majority_prob_before; }
};

/// Empirical check of the majority-probability and minority-shift claims of
/// logit-level calibration, averaged over `rows` (all rows when empty).
BiasReductionReport check_bias_reduction(const Matrix& original_logits, const CalibratedOutput& before,
                                         const CalibratedOutput& after, const Vector& neutral_logits,
                                         int majority_class, int minority_class, std::span<const Index> rows = {});

/// Most and least frequent labeled classes among `nodes` (ties: lowest index).
std::pair<int, int> majority_minority_classes(std::span<const int> labels, int num_classes, std::span<const Index> nodes);

/// node_id,predicted_label,p0..p{C-1}
void write_predictions_csv(const CalibratedOutput& output, const std::filesystem::path& path);

struct Predictions {
  std::vector<Index> node_ids;
  std::vector<int> predicted_labels;
  Matrix probabilities;
};

Predictions read_predictions_csv(const std::filesystem::path& path);

}  // namespace neubm
