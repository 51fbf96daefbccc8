#pragma once

#include "neubm/graph.hpp"

#include <optional>
#include <span>
#include <vector>

namespace neubm {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<Index> counts;  // row-major num_classes x num_classes

  explicit ConfusionMatrix(int classes = 0)
      : num_classes(classes), counts(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0) {}

  Index& at(int truth, int pred) { return counts[static_cast<std::size_t>(truth * num_classes + pred)]; }
  Index at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth * num_classes + pred)]; }
  Index total() const;
};

/// Tallies the listed nodes (an empty mask gives an all-zero matrix); the
/// three-argument overload tallies every node.
ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth, int num_classes,
                          std::span<const Index> mask);
ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth, int num_classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Index support = 0;
};

struct MetricsReport {
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  double f1_micro = 0.0;
  double accuracy = 0.0;
  double rho = 0.0;
  std::vector<ClassScores> per_class;
};

/// Precision, recall and F1 vanish where their denominators do. Macro
/// averages over all num_classes classes.
MetricsReport f1_scores(const ConfusionMatrix& cm);

/// Largest over smallest class count among classes present in the mask.
double imbalance_ratio(std::span<const int> labels, std::span<const Index> mask);

/// Median of pooled pairwise Euclidean distances (1.0 if that median is 0).
double median_heuristic_bandwidth(const Matrix& x, const Matrix& y);

/// Biased (V-statistic) MMD with an RBF kernel exp(-|a-b|^2 / (2 h^2)).
/// Uses the median heuristic when bandwidth is not given.
double mmd_rbf(const Matrix& x, const Matrix& y, std::optional<double> bandwidth = std::nullopt);

/// Index of the largest entry; ties go to the lowest index.
int argmax_row(const Matrix& m, Index row);
std::vector<int> argmax_rows(const Matrix& m);

}  // namespace neubm
