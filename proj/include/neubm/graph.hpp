#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace neubm {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = std::int64_t;

/// Marker for an unlabeled node in Graph::labels.
inline constexpr int kUnlabeled = -1;

using Edge = std::pair<Index, Index>;

/// Undirected, unweighted attributed graph.
///
/// Edges are stored canonically (u < v, lexicographically sorted, no
/// duplicates). Labels are either empty (unlabeled graph) or one entry per
/// node, with kUnlabeled marking nodes without a class.
struct Graph {
  Index num_nodes = 0;
  Matrix features;  // num_nodes x num_features
  std::vector<Edge> edges;
  std::vector<int> labels;
  int num_classes = 0;
  std::map<std::string, std::vector<Index>> masks;

  Index num_features() const { return features.cols(); }
  bool has_labels() const { return !labels.empty(); }

  /// Throws DataError if any structural invariant is violated.
  void validate() const;

  /// Boolean view of a named mask; all-false if the mask is absent.
  std::vector<bool> mask_flags(const std::string& name) const;

  bool operator==(const Graph& other) const;
};

/// Sorts, orients (u < v) and deduplicates an edge list. Self-pairs are
/// dropped.
std::vector<Edge> canonicalize_edges(std::vector<Edge> edges);

/// Compressed sparse row storage for a square real matrix.
struct CsrAdjacency {
  std::vector<Index> row_offsets;
  std::vector<Index> col_indices;
  std::vector<double> values;

  Index rows() const { return row_offsets.empty() ? 0 : static_cast<Index>(row_offsets.size()) - 1; }
  Index nnz() const { return static_cast<Index>(col_indices.size()); }

  /// Dense copy, mainly for tests and small diagnostics.
  Matrix to_dense() const;

  /// this * dense
  Matrix multiply(const Matrix& dense) const;

  /// this^T * dense. Equals multiply() for symmetric matrices.
  Matrix multiply_transposed(const Matrix& dense) const;

  bool is_symmetric(double tol) const;
};

/// Binary adjacency (A, or A + I when add_self_loops).
CsrAdjacency build_adjacency(const Graph& graph, bool add_self_loops);

/// D^{-1/2} A D^{-1/2} with degrees taken from row sums. Rows of zero degree
/// stay zero.
CsrAdjacency symmetric_normalize(const CsrAdjacency& adj);

enum class StatsScope { AllNodes, TrainMask };

struct DatasetStats {
  double n_bar = 0.0;
  double d_bar = 0.0;
  Vector mu_node;
  Matrix sigma_node;
  Index source_node_count = 0;
  StatsScope scope = StatsScope::AllNodes;
};

/// Average node count, edge density and feature moments of the in-scope
/// induced subgraph. The covariance uses the population (1/n) normalization.
DatasetStats compute_dataset_stats(const Graph& graph, StatsScope scope);

std::string to_string(StatsScope scope);
StatsScope stats_scope_from_string(const std::string& name);

}  // namespace neubm
