#pragma once

#include "neubm/gnn.hpp"
#include "neubm/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace neubm {

enum class CovarianceMode { Full, Diagonal };

/// How neutral node features are produced. The structure (node count,
/// Erdos-Renyi wiring at density d_bar) is the same for all variants.
enum class ConstructionVariant {
  MeanCov,        ///< Gaussian with the dataset's feature mean and covariance
  Random,         ///< uniform draws of source-graph feature rows
  ClassBalanced,  ///< uniform class, then uniform row within that class
};

std::string to_string(CovarianceMode mode);
CovarianceMode covariance_mode_from_string(const std::string& name);
std::string to_string(ConstructionVariant variant);
ConstructionVariant construction_variant_from_string(const std::string& name);

struct NeutralConfig {
  std::optional<Index> node_count_override;
  CovarianceMode covariance_mode = CovarianceMode::Full;
  double regularization_eps_scale = 1e-6;
  ConstructionVariant construction_variant = ConstructionVariant::MeanCov;
  int refresh_every = 0;  ///< epochs between rebuilds during model selection; 0 = never
  std::uint64_t seed = 0;

  void validate() const;
};

struct NeutralGraph {
  Graph graph;
  DatasetStats stats_used;
  NeutralConfig config;
  std::uint64_t seed = 0;
};

/// Symmetric eigen-factorization of sigma + eps*I with negative eigenvalues
/// clipped to zero; eps = eps_scale * trace(sigma) / d.
struct CovarianceFactor {
  Matrix factor;       ///< U diag(sqrt(lambda)); factor * factor^T == regularized
  Matrix regularized;  ///< reconstructed, clipped covariance
  double epsilon = 0.0;
  double clipped_mass = 0.0;  ///< sum of |lambda| over clipped eigenvalues
};

CovarianceFactor factor_covariance(const Matrix& sigma, double eps_scale);

/// `count` draws from N(mu, sigma), one per row.
Matrix sample_mvn(const Vector& mu, const Matrix& sigma, Index count, CovarianceMode mode, double eps_scale,
                  std::uint64_t seed);

/// Builds the neutral reference graph. `labeled_source` supplies feature rows
/// for the Random and ClassBalanced variants and may be null for MeanCov.
NeutralGraph construct_neutral(const DatasetStats& stats, const Graph* labeled_source, const NeutralConfig& config);

/// Eval-mode logits on the neutral graph, mean-pooled over its nodes.
Vector neutral_logit_vector(const ModelParams& params, const NeutralGraph& neutral);

/// Canonical dataset directory plus neutral_meta.json.
void save_neutral(const NeutralGraph& neutral, const std::filesystem::path& dir);

}  // namespace neubm
