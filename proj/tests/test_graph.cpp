#include "neubm/error.hpp"
#include "neubm/graph.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace neubm;
using neubm::testing::random_graph;

namespace {

Graph path_graph(Index n) {
  Graph g;
  g.num_nodes = n;
  g.features = Matrix::Zero(n, 1);
  for (Index i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

// Dense D^{-1/2} A D^{-1/2} computed entry by entry.
Matrix dense_normalize(const Matrix& a) {
  const Vector deg = a.rowwise().sum();
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) out(i, j) = a(i, j) / std::sqrt(deg(i) * deg(j));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("build_adjacency small cases") {
  Graph two = path_graph(2);
  Matrix expected2(2, 2);
  expected2 << 1, 1, 1, 1;
  CHECK(build_adjacency(two, true).to_dense() == expected2);

  Graph one = path_graph(1);
  CHECK(build_adjacency(one, true).to_dense() == Matrix::Identity(1, 1));

  Graph three = path_graph(3);
  Matrix expected3(3, 3);
  expected3 << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  CHECK(build_adjacency(three, false).to_dense() == expected3);
}

TEST_CASE("build_adjacency rejects out-of-range edges") {
  Graph g = path_graph(10);
  g.edges.emplace_back(3, 99);
  CHECK_THROWS_AS(build_adjacency(g, true), StructuralError);
}

TEST_CASE("csr rows have strictly increasing columns") {
  const Graph g = random_graph(30, 0.2, 2, 2, 3);
  const auto adj = build_adjacency(g, true);
  for (Index i = 0; i < adj.rows(); ++i) {
    CHECK(adj.row_offsets[static_cast<std::size_t>(i)] <= adj.row_offsets[static_cast<std::size_t>(i + 1)]);
    for (Index k = adj.row_offsets[static_cast<std::size_t>(i)] + 1; k < adj.row_offsets[static_cast<std::size_t>(i + 1)]; ++k) {
      CHECK(adj.col_indices[static_cast<std::size_t>(k - 1)] < adj.col_indices[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("symmetric_normalize hand examples") {
  Graph two = path_graph(2);
  Matrix half = Matrix::Constant(2, 2, 0.5);
  CHECK(symmetric_normalize(build_adjacency(two, true)).to_dense().isApprox(half, 1e-15));

  Graph isolated;
  isolated.num_nodes = 4;
  isolated.features = Matrix::Zero(4, 1);
  CHECK(symmetric_normalize(build_adjacency(isolated, true)).to_dense() == Matrix::Identity(4, 4));

  const Matrix p = symmetric_normalize(build_adjacency(path_graph(3), false)).to_dense();
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(p(0, 1) == doctest::Approx(r).epsilon(1e-15));
  CHECK(p(1, 0) == doctest::Approx(r).epsilon(1e-15));
  CHECK(p(1, 2) == doctest::Approx(r).epsilon(1e-15));
  CHECK(p(2, 1) == doctest::Approx(r).epsilon(1e-15));
  CHECK(p(0, 0) == 0.0);
}

TEST_CASE("zero-degree rows stay zero without self loops") {
  Graph g = path_graph(3);
  g.num_nodes = 4;
  g.features = Matrix::Zero(4, 1);
  const Matrix p = symmetric_normalize(build_adjacency(g, false)).to_dense();
  CHECK(p.row(3).isZero(0.0));
  CHECK(p.col(3).isZero(0.0));
}

TEST_CASE("normalization matches a dense oracle and is symmetric") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = random_graph(25, 0.15, 1, 2, seed);
    const auto adj = build_adjacency(g, true);
    const auto norm = symmetric_normalize(adj);
    const Matrix dense = norm.to_dense();
    CHECK((dense - dense_normalize(adj.to_dense())).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(norm.is_symmetric(1e-12));
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

    Matrix x = Matrix::Random(25, 3);
    CHECK((norm.multiply(x) - dense * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((norm.multiply_transposed(x) - dense.transpose() * x).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("canonicalize_edges orients, sorts, dedups and drops self pairs") {
  const auto e = canonicalize_edges({{3, 1}, {1, 3}, {0, 2}, {2, 2}, {0, 1}});
  const std::vector<Edge> expected{{0, 1}, {0, 2}, {1, 3}};
  CHECK(e == expected);
}

TEST_CASE("graph validation catches broken invariants") {
  Graph g = path_graph(3);
  g.labels = {0, 1, 0};
  g.num_classes = 2;
  CHECK_NOTHROW(g.validate());

  Graph bad_label = g;
  bad_label.labels[1] = 2;
  CHECK_THROWS_AS(bad_label.validate(), DataError);

  Graph overlap = g;
  overlap.masks["train"] = {0, 1};
  overlap.masks["test"] = {1, 2};
  CHECK_THROWS_AS(overlap.validate(), DataError);

  Graph self_pair = g;
  self_pair.edges.emplace_back(2, 2);
  CHECK_THROWS_AS(self_pair.validate(), StructuralError);
}

TEST_CASE("dataset stats: hand example and identities") {
  Graph g;
  g.num_nodes = 4;
  g.features = Matrix::Zero(4, 2);
  g.edges = {{0, 1}, {1, 2}, {2, 3}};
  auto s = compute_dataset_stats(g, StatsScope::AllNodes);
  CHECK(s.n_bar == 4.0);
  CHECK(s.d_bar == 0.5);

  Graph same = g;
  same.features.row(0) << 1.5, -2;
  same.features.row(1) << 1.5, -2;
  same.features.row(2) << 1.5, -2;
  same.features.row(3) << 1.5, -2;
  s = compute_dataset_stats(same, StatsScope::AllNodes);
  CHECK(s.mu_node(0) == 1.5);
  CHECK(s.mu_node(1) == -2.0);
  CHECK(s.sigma_node.isZero(1e-15));
}

TEST_CASE("covariance equals the raw second-moment form") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = random_graph(40, 0.1, 5, 3, seed);
    const auto s = compute_dataset_stats(g, StatsScope::AllNodes);
    const Matrix second = g.features.transpose() * g.features / 40.0;
    const Matrix alt = second - s.mu_node * s.mu_node.transpose();
    CHECK((alt - s.sigma_node).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s.sigma_node - s.sigma_node.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("density lies in [0,1] and equals 1 on complete graphs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 9);
    const Graph g = random_graph(n, 0.4, 1, 2, seed);
    const auto s = compute_dataset_stats(g, StatsScope::AllNodes);
    Index brute = 0;
    const Matrix a = build_adjacency(g, false).to_dense();
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) brute += a(i, j) != 0.0;
    }
    CHECK(s.d_bar == doctest::Approx(2.0 * static_cast<double>(brute) / static_cast<double>(n * (n - 1))));
    CHECK(s.d_bar >= 0.0);
    CHECK(s.d_bar <= 1.0);
  }
  const Graph complete = random_graph(7, 1.1, 1, 2, 1);
  CHECK(compute_dataset_stats(complete, StatsScope::AllNodes).d_bar == 1.0);
}

TEST_CASE("train_mask scope uses the induced subgraph") {
  Graph g = path_graph(5);
  g.features.col(0) << 0, 1, 2, 3, 100;
  g.masks["train"] = {0, 1, 2};
  const auto s = compute_dataset_stats(g, StatsScope::TrainMask);
  CHECK(s.n_bar == 3.0);
  CHECK(s.d_bar == doctest::Approx(2.0 / 3.0));
  CHECK(s.mu_node(0) == doctest::Approx(1.0));
  CHECK(s.source_node_count == 3);
}

TEST_CASE("dataset stats errors") {
  Graph one = path_graph(1);
  CHECK_THROWS_AS(compute_dataset_stats(one, StatsScope::AllNodes), DataError);
  Graph g = path_graph(4);
  CHECK_THROWS_AS(compute_dataset_stats(g, StatsScope::TrainMask), DataError);
  g.masks["train"] = {};
  CHECK_THROWS_AS(compute_dataset_stats(g, StatsScope::TrainMask), DataError);
  CHECK_THROWS_AS(stats_scope_from_string("everything"), ConfigError);
}
