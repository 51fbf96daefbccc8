#include "neubm/neutral.hpp"

#include "neubm/dataset.hpp"
#include "neubm/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>

namespace neubm {

namespace {

// Feature sampling uses its own stream so that the wiring for a given seed
// does not depend on the construction variant.
constexpr std::uint64_t kFeatureStream = 0x9e3779b97f4a7c15ULL;

void check_symmetric(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw DataError("covariance matrix is not square");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) throw DataError("covariance matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
}

}  // namespace

std::string to_string(CovarianceMode mode) { return mode == CovarianceMode::Full ? "full" : "diagonal"; }

CovarianceMode covariance_mode_from_string(const std::string& name) {
  if (name == "full") return CovarianceMode::Full;
  if (name == "diagonal") return CovarianceMode::Diagonal;
  throw ConfigError("unknown covariance mode '" + name + "'");
}

std::string to_string(ConstructionVariant variant) {
  switch (variant) {
    case ConstructionVariant::MeanCov: return "mean_cov";
    case ConstructionVariant::Random: return "random";
    case ConstructionVariant::ClassBalanced: return "class_balanced";
  }
  return "mean_cov";
}

ConstructionVariant construction_variant_from_string(const std::string& name) {
  if (name == "mean_cov") return ConstructionVariant::MeanCov;
  if (name == "random") return ConstructionVariant::Random;
  if (name == "class_balanced") return ConstructionVariant::ClassBalanced;
  throw ConfigError("unknown neutral construction variant '" + name + "'");
}

void NeutralConfig::validate() const {
  if (node_count_override && *node_count_override < 1) throw ConfigError("neutral node count must be >= 1");
  if (!(regularization_eps_scale > 0.0)) throw ConfigError("regularization_eps_scale must be > 0");
  if (refresh_every < 0 || refresh_every > 10) throw ConfigError("refresh_every must be 'never' or in [1,10]");
}

CovarianceFactor factor_covariance(const Matrix& sigma, double eps_scale) {
  check_symmetric(sigma);
  const Index d = sigma.rows();
  CovarianceFactor f;
  f.epsilon = d > 0 ? eps_scale * sigma.trace() / static_cast<double>(d) : 0.0;
  if (f.epsilon < 0.0) f.epsilon = 0.0;
  const Eigen::MatrixXd shifted = sigma + f.epsilon * Eigen::MatrixXd::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(shifted);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition of the covariance failed");
  Vector lambda = solver.eigenvalues();
  for (Index i = 0; i < d; ++i) {
    if (lambda(i) < 0.0) {
      f.clipped_mass += -lambda(i);
      lambda(i) = 0.0;
    }
  }
  f.factor = solver.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
  f.regularized = f.factor * f.factor.transpose();
  return f;
}

Matrix sample_mvn(const Vector& mu, const Matrix& sigma, Index count, CovarianceMode mode, double eps_scale,
                  std::uint64_t seed) {
  check_symmetric(sigma);
  if (sigma.rows() != mu.size()) throw DataError("mean and covariance dimensions differ");
  if (count < 0) throw ConfigError("sample count must be >= 0");
  const Index d = mu.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(count, d);
  for (Index i = 0; i < count; ++i) {
    for (Index j = 0; j < d; ++j) z(i, j) = normal(rng);
  }
  Matrix out(count, d);
  if (mode == CovarianceMode::Diagonal) {
    const Vector std_dev = sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
    out = z * std_dev.asDiagonal();
  } else {
    if (sigma.isZero(0.0)) {
      out.setZero();
    } else {
      out = z * factor_covariance(sigma, eps_scale).factor.transpose();
    }
  }
  out.rowwise() += mu.transpose();
  return out;
}

NeutralGraph construct_neutral(const DatasetStats& stats, const Graph* labeled_source, const NeutralConfig& config) {
  config.validate();
  if (!(stats.d_bar >= 0.0 && stats.d_bar <= 1.0)) throw DataError("edge density must lie in [0,1]");
  const Index n = config.node_count_override ? *config.node_count_override
                                             : static_cast<Index>(std::floor(stats.n_bar));
  if (n < 1) throw DataError("infeasible neutral graph: average node count below 1");

  NeutralGraph neutral;
  neutral.stats_used = stats;
  neutral.config = config;
  neutral.seed = config.seed;
  Graph& g = neutral.graph;
  g.num_nodes = n;

  std::mt19937_64 structure(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      if (unit(structure) < stats.d_bar) g.edges.emplace_back(u, v);
    }
  }

  const std::uint64_t feature_seed = config.seed ^ kFeatureStream;
  switch (config.construction_variant) {
    case ConstructionVariant::MeanCov:
      g.features = sample_mvn(stats.mu_node, stats.sigma_node, n, config.covariance_mode,
                              config.regularization_eps_scale, feature_seed);
      break;
    case ConstructionVariant::Random: {
      if (!labeled_source || labeled_source->num_nodes == 0) {
        throw DataError("the random neutral variant needs a source graph");
      }
      std::mt19937_64 rng(feature_seed);
      std::uniform_int_distribution<Index> pick(0, labeled_source->num_nodes - 1);
      g.features.resize(n, labeled_source->num_features());
      for (Index i = 0; i < n; ++i) g.features.row(i) = labeled_source->features.row(pick(rng));
      break;
    }
    case ConstructionVariant::ClassBalanced: {
      if (!labeled_source || !labeled_source->has_labels()) {
        throw DataError("the class_balanced neutral variant needs a labeled source graph");
      }
      std::vector<std::vector<Index>> members(static_cast<std::size_t>(labeled_source->num_classes));
      for (Index i = 0; i < labeled_source->num_nodes; ++i) {
        const int y = labeled_source->labels[static_cast<std::size_t>(i)];
        if (y != kUnlabeled) members[static_cast<std::size_t>(y)].push_back(i);
      }
      std::erase_if(members, [](const auto& m) { return m.empty(); });
      if (members.empty()) throw DataError("the class_balanced neutral variant needs labeled nodes");
      std::mt19937_64 rng(feature_seed);
      std::uniform_int_distribution<std::size_t> pick_class(0, members.size() - 1);
      g.features.resize(n, labeled_source->num_features());
      for (Index i = 0; i < n; ++i) {
        const auto& pool = members[pick_class(rng)];
        std::uniform_int_distribution<std::size_t> pick_row(0, pool.size() - 1);
        g.features.row(i) = labeled_source->features.row(pool[pick_row(rng)]);
      }
      break;
    }
  }
  return neutral;
}

Vector neutral_logit_vector(const ModelParams& params, const NeutralGraph& neutral) {
  if (neutral.graph.num_features() != params.config.input_dim) {
    throw DataError("neutral feature width " + std::to_string(neutral.graph.num_features()) +
                    " does not match model input_dim " + std::to_string(params.config.input_dim));
  }
  const Matrix logits = predict_logits(params, neutral.graph);
  return logits.colwise().mean().transpose();
}

void save_neutral(const NeutralGraph& neutral, const std::filesystem::path& dir) {
  save_canonical(neutral.graph, dir);
  const auto& s = neutral.stats_used;
  const auto& c = neutral.config;
  nlohmann::json meta;
  meta["seed"] = neutral.seed;
  meta["stats"] = {{"n_bar", s.n_bar},
                   {"d_bar", s.d_bar},
                   {"source_node_count", s.source_node_count},
                   {"scope", to_string(s.scope)},
                   {"mu_node", std::vector<double>(s.mu_node.data(), s.mu_node.data() + s.mu_node.size())}};
  meta["config"] = {{"node_count", neutral.graph.num_nodes},
                    {"covariance_mode", to_string(c.covariance_mode)},
                    {"regularization_eps_scale", c.regularization_eps_scale},
                    {"construction_variant", to_string(c.construction_variant)},
                    {"refresh_every", c.refresh_every == 0 ? nlohmann::json("never") : nlohmann::json(c.refresh_every)}};
  meta["pooling"] = "mean";
  std::ofstream out(dir / "neutral_meta.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "neutral_meta.json").string());
  out << meta.dump(2) << "\n";
}

}  // namespace neubm
