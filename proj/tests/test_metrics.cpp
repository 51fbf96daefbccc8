#include "neubm/error.hpp"
#include "neubm/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

using namespace neubm;

namespace {

// Straight from the definitions, one class at a time over the raw vectors.
struct Oracle {
  double macro = 0.0, weighted = 0.0, micro = 0.0;
};

Oracle brute_force(const std::vector<int>& pred, const std::vector<int>& truth, int classes) {
  Oracle o;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  o.micro = static_cast<double>(correct) / static_cast<double>(pred.size());
  for (int c = 0; c < classes; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      tp += pred[i] == c && truth[i] == c;
      fp += pred[i] == c && truth[i] != c;
      fn += pred[i] != c && truth[i] == c;
    }
    const double f1 = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    o.macro += f1 / classes;
    o.weighted += f1 * (tp + fn) / static_cast<double>(pred.size());
  }
  return o;
}

}  // namespace

TEST_CASE("hand confusion matrix") {
  ConfusionMatrix cm(2);
  cm.at(0, 0) = 1;
  cm.at(1, 0) = 1;
  cm.at(1, 1) = 2;
  const auto r = f1_scores(cm);
  CHECK(r.per_class[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.per_class[1].f1 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.f1_macro == doctest::Approx((2.0 / 3.0 + 0.8) / 2).epsilon(1e-15));
  CHECK(r.f1_micro == doctest::Approx(0.75));
  CHECK(r.f1_weighted == doctest::Approx((2.0 / 3.0 + 3 * 0.8) / 4));
  CHECK(r.rho == 3.0);  // supports 1 and 3
}

TEST_CASE("confusion tallies") {
  const std::vector<int> pred{0, 1, 1, 2};
  const std::vector<int> truth{0, 1, 2, 2};
  const auto all = confusion(pred, truth, 3);
  CHECK(all.total() == 4);
  CHECK(all.at(2, 1) == 1);
  const std::vector<Index> mask{2, 3};
  const auto some = confusion(pred, truth, 3, mask);
  CHECK(some.total() == 2);
  CHECK(some.at(2, 2) == 1);
  CHECK(confusion(pred, truth, 3, std::vector<Index>{}).total() == 0);
}

TEST_CASE("f1 family agrees with a brute-force oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int classes = 2 + static_cast<int>(rng() % 5);
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng() % static_cast<unsigned>(classes));
      truth[i] = rng() % 3 == 0 ? pred[i] : static_cast<int>(rng() % static_cast<unsigned>(classes));
    }
    const auto r = f1_scores(confusion(pred, truth, classes));
    const auto o = brute_force(pred, truth, classes);
    REQUIRE(std::abs(r.f1_macro - o.macro) < 1e-12);
    REQUIRE(std::abs(r.f1_weighted - o.weighted) < 1e-12);
    REQUIRE(std::abs(r.f1_micro - o.micro) < 1e-12);
    REQUIRE(r.f1_micro == r.accuracy);
    REQUIRE(r.f1_weighted >= 0.0);
    REQUIRE(r.f1_weighted <= 1.0 + 1e-15);

    // consistent relabeling of both vectors permutes classes only
    std::vector<int> perm(static_cast<std::size_t>(classes));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> p2(n), t2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p2[i] = perm[static_cast<std::size_t>(pred[i])];
      t2[i] = perm[static_cast<std::size_t>(truth[i])];
    }
    const auto r2 = f1_scores(confusion(p2, t2, classes));
    REQUIRE(std::abs(r2.f1_macro - r.f1_macro) < 1e-12);
    REQUIRE(std::abs(r2.f1_weighted - r.f1_weighted) < 1e-12);
  }
}

TEST_CASE("empty confusion matrix is an error") {
  CHECK_THROWS_AS(f1_scores(ConfusionMatrix(3)), DataError);
  CHECK_THROWS_AS(f1_scores(ConfusionMatrix(0)), DataError);
}

TEST_CASE("absent class contributes zero to macro F1") {
  const std::vector<int> v{0, 0, 1};
  const auto r = f1_scores(confusion(v, v, 3));
  CHECK(r.f1_macro == doctest::Approx(2.0 / 3.0));
  CHECK(r.f1_weighted == 1.0);
}

TEST_CASE("imbalance ratio") {
  const std::vector<int> labels{0, 0, 0, 0, 0, 1, kUnlabeled};
  CHECK(imbalance_ratio(labels, {}) == 5.0);
  const std::vector<Index> mask{0, 5};
  CHECK(imbalance_ratio(labels, mask) == 1.0);
  const std::vector<int> none{kUnlabeled};
  CHECK_THROWS_AS(imbalance_ratio(none, {}), DataError);
}

TEST_CASE("mmd closed form and invariances") {
  Matrix x(1, 1), y(1, 1);
  x << 0;
  y << 1;
  CHECK(mmd_rbf(x, y, 1.0 / std::sqrt(2.0)) == doctest::Approx(std::sqrt(2.0 - 2.0 * std::exp(-1.0))).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix a(30, 4), b(25, 4);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng) + 0.5;
  CHECK(mmd_rbf(a, a, 1.0) == doctest::Approx(0.0));
  CHECK(mmd_rbf(a, b, 1.3) == doctest::Approx(mmd_rbf(b, a, 1.3)).epsilon(1e-14));
  CHECK(mmd_rbf(a, b) == doctest::Approx(mmd_rbf(b, a)).epsilon(1e-14));
  Matrix a2 = a, b2 = b;
  a2.rowwise() += Eigen::RowVectorXd::Constant(4, 7.5);
  b2.rowwise() += Eigen::RowVectorXd::Constant(4, 7.5);
  CHECK(mmd_rbf(a2, b2, 1.3) == doctest::Approx(mmd_rbf(a, b, 1.3)).epsilon(1e-10));
  CHECK(mmd_rbf(a2, b2) == doctest::Approx(mmd_rbf(a, b)).epsilon(1e-10));
  CHECK(mmd_rbf(a, b, 1.0) > 0.0);

  CHECK_THROWS_AS(mmd_rbf(a, b, 0.0), ConfigError);
  CHECK_THROWS_AS(mmd_rbf(a, Matrix(3, 2)), DataError);
}

TEST_CASE("argmax ties resolve to the lowest index") {
  Matrix m(2, 3);
  m << 1, 3, 3, 2, 2, 2;
  CHECK(argmax_row(m, 0) == 1);
  CHECK(argmax_rows(m) == std::vector<int>{1, 0});
}
