#pragma once

#include "neubm/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace neubm {

struct SplitAssignment {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
  std::uint64_t seed = 0;
  std::optional<int> fold_id;

  /// Copies the split into graph.masks under "train"/"val"/"test".
  void apply_to(Graph& graph) const;
};

struct SbmConfig {
  int num_classes = 5;
  Index total_nodes = 2000;
  double rho = 10.0;
  double p_intra = 0.01;
  double p_inter = 0.001;
  Index feature_dim = 16;
  double class_mean_separation = 1.0;
  double feature_std = 1.0;
  std::uint64_t seed = 0;
};

enum class NoiseKind { Feature, Structural };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Feature;
  double level = 0.0;
  std::uint64_t seed = 0;
};

/// Table-style dataset summary printed by the loader and the `stats` command.
struct DatasetSummary {
  Index nodes = 0;
  Index edges = 0;
  Index features = 0;
  int classes = 0;
  Index labeled = 0;
  Index min_class_count = 0;
  Index max_class_count = 0;
  double rho = 0.0;          // max / min
  double rho_inverse = 0.0;  // min / max
  std::vector<Index> class_counts;

  std::string line() const;
};

DatasetSummary summarize(const Graph& graph);

/// Reads a canonical dataset directory (meta.json, features.csv, edges.csv,
/// labels.csv, optional masks.json).
Graph load_canonical(const std::filesystem::path& dir);

/// Writes the canonical format. Reals are written with round-trip precision.
void save_canonical(const Graph& graph, const std::filesystem::path& dir);

/// Class sizes interpolated geometrically from largest to smallest so that
/// largest/smallest == rho (up to rounding); sizes sum to total_nodes.
std::vector<Index> sbm_class_sizes(int num_classes, Index total_nodes, double rho);

Graph generate_sbm(const SbmConfig& config);

SplitAssignment stratified_split(const Graph& graph, double train_frac, double val_frac, Index min_per_class,
                                 std::uint64_t seed);

/// k independent stratified splits; fold f uses seed + f.
std::vector<SplitAssignment> kfold_splits(const Graph& graph, int k, double train_frac, double val_frac,
                                          Index min_per_class, std::uint64_t seed);

Graph inject_noise(const Graph& graph, const NoiseSpec& spec);

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

}  // namespace neubm
