#include "neubm/graph.hpp"

#include "neubm/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace neubm {

void Graph::validate() const {
  if (num_nodes < 0) throw DataError("negative node count");
  if (features.rows() != num_nodes) {
    throw DataError("feature matrix has " + std::to_string(features.rows()) + " rows, expected " +
                    std::to_string(num_nodes));
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [u, v] = edges[i];
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      throw StructuralError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                      ") references a node outside [0," + std::to_string(num_nodes) + ")");
    }
    if (u >= v) throw StructuralError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") is not canonical (u < v)");
    if (i > 0 && !(edges[i - 1] < edges[i])) throw DataError("edge list is not sorted and duplicate-free");
  }
  if (has_labels()) {
    if (static_cast<Index>(labels.size()) != num_nodes) throw DataError("label vector length differs from node count");
    for (Index i = 0; i < num_nodes; ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      if (y != kUnlabeled && (y < 0 || y >= num_classes)) {
        throw DataError("label " + std::to_string(y) + " of node " + std::to_string(i) + " outside [0," +
                        std::to_string(num_classes) + ")");
      }
    }
  }
  std::vector<int> owner(static_cast<std::size_t>(num_nodes), -1);
  int split_id = 0;
  for (const auto& [name, idx] : masks) {
    const bool exclusive = name == "train" || name == "val" || name == "test";
    for (Index v : idx) {
      if (v < 0 || v >= num_nodes) throw DataError("mask '" + name + "' references node " + std::to_string(v));
      if (!exclusive) continue;
      int& o = owner[static_cast<std::size_t>(v)];
      if (o != -1 && o != split_id) throw DataError("node " + std::to_string(v) + " appears in more than one split");
      o = split_id;
    }
    if (exclusive) ++split_id;
  }
}

std::vector<bool> Graph::mask_flags(const std::string& name) const {
  std::vector<bool> flags(static_cast<std::size_t>(num_nodes), false);
  if (auto it = masks.find(name); it != masks.end()) {
    for (Index v : it->second) flags[static_cast<std::size_t>(v)] = true;
  }
  return flags;
}

bool Graph::operator==(const Graph& other) const {
  return num_nodes == other.num_nodes && features.rows() == other.features.rows() &&
         features.cols() == other.features.cols() && features == other.features && edges == other.edges &&
         labels == other.labels && num_classes == other.num_classes && masks == other.masks;
}

std::vector<Edge> canonicalize_edges(std::vector<Edge> edges) {
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

Matrix CsrAdjacency::to_dense() const {
  const Index n = rows();
  Matrix dense = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) dense(i, col_indices[k]) = values[k];
  }
  return dense;
}

Matrix CsrAdjacency::multiply(const Matrix& dense) const {
  const Index n = rows();
  Matrix out = Matrix::Zero(n, dense.cols());
  for (Index i = 0; i < n; ++i) {
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      out.row(i).noalias() += values[k] * dense.row(col_indices[k]);
    }
  }
  return out;
}

Matrix CsrAdjacency::multiply_transposed(const Matrix& dense) const {
  const Index n = rows();
  Matrix out = Matrix::Zero(n, dense.cols());
  for (Index i = 0; i < n; ++i) {
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      out.row(col_indices[k]).noalias() += values[k] * dense.row(i);
    }
  }
  return out;
}

bool CsrAdjacency::is_symmetric(double tol) const {
  const Index n = rows();
  for (Index i = 0; i < n; ++i) {
    for (Index k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      const Index j = col_indices[k];
      const auto begin = col_indices.begin() + row_offsets[j];
      const auto end = col_indices.begin() + row_offsets[j + 1];
      const auto it = std::lower_bound(begin, end, i);
      if (it == end || *it != i) return false;
      if (std::abs(values[static_cast<std::size_t>(it - col_indices.begin())] - values[k]) > tol) return false;
    }
  }
  return true;
}

CsrAdjacency build_adjacency(const Graph& graph, bool add_self_loops) {
  const Index n = graph.num_nodes;
  std::vector<std::vector<Index>> neighbors(static_cast<std::size_t>(n));
  for (const auto& [u, v] : graph.edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw StructuralError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range for " +
                      std::to_string(n) + " nodes");
    }
    if (u == v) throw StructuralError("self-pair (" + std::to_string(u) + "," + std::to_string(v) + ") in edge list");
    neighbors[static_cast<std::size_t>(u)].push_back(v);
    neighbors[static_cast<std::size_t>(v)].push_back(u);
  }
  CsrAdjacency adj;
  adj.row_offsets.reserve(static_cast<std::size_t>(n) + 1);
  adj.row_offsets.push_back(0);
  for (Index i = 0; i < n; ++i) {
    auto& row = neighbors[static_cast<std::size_t>(i)];
    if (add_self_loops) row.push_back(i);
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    adj.col_indices.insert(adj.col_indices.end(), row.begin(), row.end());
    adj.row_offsets.push_back(static_cast<Index>(adj.col_indices.size()));
  }
  adj.values.assign(adj.col_indices.size(), 1.0);
  return adj;
}

CsrAdjacency symmetric_normalize(const CsrAdjacency& adj) {
  const Index n = adj.rows();
  std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) {
    double deg = 0.0;
    for (Index k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k) deg += adj.values[k];
    if (deg > 0.0) inv_sqrt_deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
  }
  CsrAdjacency out = adj;
  for (Index i = 0; i < n; ++i) {
    for (Index k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k) {
      out.values[k] = adj.values[k] * inv_sqrt_deg[static_cast<std::size_t>(i)] *
                      inv_sqrt_deg[static_cast<std::size_t>(adj.col_indices[k])];
    }
  }
  return out;
}

DatasetStats compute_dataset_stats(const Graph& graph, StatsScope scope) {
  if (graph.features.cols() == 0 && graph.num_nodes > 0) throw DataError("graph has no features");
  std::vector<Index> nodes;
  if (scope == StatsScope::TrainMask) {
    auto it = graph.masks.find("train");
    if (it == graph.masks.end()) throw DataError("stats scope 'train_mask' requires a train mask");
    nodes = it->second;
    std::sort(nodes.begin(), nodes.end());
  } else {
    nodes.resize(static_cast<std::size_t>(graph.num_nodes));
    for (Index i = 0; i < graph.num_nodes; ++i) nodes[static_cast<std::size_t>(i)] = i;
  }
  const auto n = static_cast<Index>(nodes.size());
  if (n == 0) throw DataError("dataset statistics over an empty node scope");
  if (n < 2) throw DataError("edge density is undefined for fewer than 2 nodes");

  std::vector<bool> in_scope(static_cast<std::size_t>(graph.num_nodes), false);
  for (Index v : nodes) in_scope[static_cast<std::size_t>(v)] = true;
  Index scoped_edges = 0;
  for (const auto& [u, v] : graph.edges) {
    if (in_scope[static_cast<std::size_t>(u)] && in_scope[static_cast<std::size_t>(v)]) ++scoped_edges;
  }

  DatasetStats stats;
  stats.scope = scope;
  stats.source_node_count = n;
  stats.n_bar = static_cast<double>(n);
  stats.d_bar = 2.0 * static_cast<double>(scoped_edges) / (static_cast<double>(n) * static_cast<double>(n - 1));

  const Index d = graph.features.cols();
  stats.mu_node = Vector::Zero(d);
  for (Index v : nodes) stats.mu_node += graph.features.row(v).transpose();
  stats.mu_node /= static_cast<double>(n);

  Matrix centered(n, d);
  for (Index r = 0; r < n; ++r) centered.row(r) = graph.features.row(nodes[static_cast<std::size_t>(r)]) - stats.mu_node.transpose();
  stats.sigma_node = (centered.transpose() * centered) / static_cast<double>(n);
  // Exact symmetry; the product above is symmetric only up to rounding.
  stats.sigma_node = 0.5 * (stats.sigma_node + stats.sigma_node.transpose()).eval();
  return stats;
}

std::string to_string(StatsScope scope) { return scope == StatsScope::TrainMask ? "train_mask" : "all_nodes"; }

StatsScope stats_scope_from_string(const std::string& name) {
  if (name == "all_nodes") return StatsScope::AllNodes;
  if (name == "train_mask") return StatsScope::TrainMask;
  throw ConfigError("unknown stats scope '" + name + "'");
}

}  // namespace neubm
