#pragma once

#include "neubm/gnn.hpp"
#include "neubm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

namespace neubm::testing {

/// Erdos-Renyi graph with Gaussian features and uniform labels.
inline Graph random_graph(Index n, double p, Index features, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, classes - 1);
  Graph g;
  g.num_nodes = n;
  g.num_classes = classes;
  g.features.resize(n, features);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < features; ++j) g.features(i, j) = normal(rng);
  }
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      if (unit(rng) < p) g.edges.emplace_back(u, v);
    }
  }
  for (Index i = 0; i < n; ++i) g.labels.push_back(label(rng));
  return g;
}

/// Largest entrywise relative error between the analytic gradient and central
/// differences with step h. Train mode reuses `seed` so the dropout masks match.
inline double fd_relative_error(const ModelParams& params, const GraphOperator& op, const Graph& g,
                                const std::vector<Index>& mask, double wd, Mode mode, std::uint64_t seed,
                                double h = 1e-5) {
  const Vector analytic = loss_and_gradient(params, op, g.features, g.labels, mask, wd, mode, seed).gradient;
  ModelParams probe = params;
  auto loss_at = [&](const Vector& flat) {
    probe.set_flat(flat);
    return cross_entropy_loss(forward(probe, op, g.features, mode, seed), g.labels, mask, wd, probe);
  };
  const Vector base = params.flat();
  double worst = 0.0;
  for (Index i = 0; i < base.size(); ++i) {
    Vector plus = base, minus = base;
    plus(i) += h;
    minus(i) -= h;
    const double numeric = (loss_at(plus) - loss_at(minus)) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic(i)), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic(i)) / scale);
  }
  return worst;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("neubm_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) return {};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

}  // namespace neubm::testing
