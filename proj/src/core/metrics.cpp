#include "neubm/metrics.hpp"

#include "neubm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace neubm {

Index ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), Index{0}); }

namespace {

void tally(ConfusionMatrix& cm, std::span<const int> pred, std::span<const int> truth, std::size_t i) {
  const int t = truth[i];
  const int p = pred[i];
  if (t < 0 || t >= cm.num_classes) throw DataError("true label " + std::to_string(t) + " of node " + std::to_string(i) + " out of range");
  if (p < 0 || p >= cm.num_classes) throw DataError("predicted label " + std::to_string(p) + " of node " + std::to_string(i) + " out of range");
  ++cm.at(t, p);
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth, int num_classes,
                          std::span<const Index> mask) {
  if (pred.size() != truth.size()) {
    throw DataError("prediction/label length mismatch: " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
  }
  if (num_classes < 1) throw ConfigError("confusion matrix needs at least one class");
  ConfusionMatrix cm(num_classes);
  for (Index v : mask) {
    if (v < 0 || static_cast<std::size_t>(v) >= pred.size()) throw DataError("mask index " + std::to_string(v) + " out of range");
    tally(cm, pred, truth, static_cast<std::size_t>(v));
  }
  return cm;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth, int num_classes) {
  if (pred.size() != truth.size()) {
    throw DataError("prediction/label length mismatch: " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
  }
  if (num_classes < 1) throw ConfigError("confusion matrix needs at least one class");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) tally(cm, pred, truth, i);
  return cm;
}

MetricsReport f1_scores(const ConfusionMatrix& cm) {
  const int C = cm.num_classes;
  const Index total = cm.total();
  if (C == 0 || total == 0) throw DataError("metrics are undefined for an empty confusion matrix");

  MetricsReport r;
  r.per_class.resize(static_cast<std::size_t>(C));
  Index correct = 0;
  for (int c = 0; c < C; ++c) {
    Index predicted = 0;
    Index actual = 0;
    for (int k = 0; k < C; ++k) {
      predicted += cm.at(k, c);
      actual += cm.at(c, k);
    }
    const auto tp = static_cast<double>(cm.at(c, c));
    correct += cm.at(c, c);
    auto& s = r.per_class[static_cast<std::size_t>(c)];
    s.support = actual;
    s.precision = safe_ratio(tp, static_cast<double>(predicted));
    s.recall = safe_ratio(tp, static_cast<double>(actual));
    s.f1 = safe_ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  }
  double macro = 0.0;
  double weighted = 0.0;
  Index lo = 0;
  Index hi = 0;
  for (const auto& s : r.per_class) {
    macro += s.f1;
    weighted += static_cast<double>(s.support) * s.f1;
    if (s.support > 0) {
      lo = lo == 0 ? s.support : std::min(lo, s.support);
      hi = std::max(hi, s.support);
    }
  }
  r.f1_macro = macro / static_cast<double>(C);
  r.f1_weighted = weighted / static_cast<double>(total);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  r.f1_micro = r.accuracy;
  r.rho = static_cast<double>(hi) / static_cast<double>(lo);
  return r;
}

double imbalance_ratio(std::span<const int> labels, std::span<const Index> mask) {
  std::vector<Index> counts;
  auto count = [&](int y) {
    if (y == kUnlabeled) return;
    if (y < 0) throw DataError("negative label " + std::to_string(y));
    if (static_cast<std::size_t>(y) >= counts.size()) counts.resize(static_cast<std::size_t>(y) + 1, 0);
    ++counts[static_cast<std::size_t>(y)];
  };
  if (mask.empty()) {
    for (int y : labels) count(y);
  } else {
    for (Index v : mask) count(labels[static_cast<std::size_t>(v)]);
  }
  Index lo = 0;
  Index hi = 0;
  for (Index c : counts) {
    if (c == 0) continue;
    lo = lo == 0 ? c : std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (hi == 0) throw DataError("imbalance ratio of an empty class set");
  return static_cast<double>(hi) / static_cast<double>(lo);
}

double median_heuristic_bandwidth(const Matrix& x, const Matrix& y) {
  Matrix pooled(x.rows() + y.rows(), x.cols());
  pooled << x, y;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(pooled.rows() * (pooled.rows() - 1) / 2));
  for (Index i = 0; i < pooled.rows(); ++i) {
    for (Index j = i + 1; j < pooled.rows(); ++j) dists.push_back((pooled.row(i) - pooled.row(j)).norm());
  }
  if (dists.empty()) return 1.0;
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  double median = *mid;
  if (dists.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dists.begin(), mid));
  return median > 0.0 ? median : 1.0;
}

double mmd_rbf(const Matrix& x, const Matrix& y, std::optional<double> bandwidth) {
  if (x.cols() == 0 || y.cols() == 0) throw DataError("MMD of zero-dimensional samples");
  if (x.cols() != y.cols()) throw DataError("MMD samples differ in dimension");
  if (x.rows() == 0 || y.rows() == 0) throw DataError("MMD needs at least one sample per set");
  const double h = bandwidth ? *bandwidth : median_heuristic_bandwidth(x, y);
  if (!(h > 0.0)) throw ConfigError("MMD bandwidth must be positive");
  const double gamma = 1.0 / (2.0 * h * h);
  auto mean_kernel = [gamma](const Matrix& a, const Matrix& b) {
    double sum = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < b.rows(); ++j) sum += std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
    }
    return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
  };
  const double mmd2 = mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y);
  return std::sqrt(std::max(0.0, mmd2));
}

int argmax_row(const Matrix& m, Index row) {
  int best = 0;
  for (Index c = 1; c < m.cols(); ++c) {
    if (m(row, c) > m(row, best)) best = static_cast<int>(c);
  }
  return best;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_row(m, i);
  return out;
}

}  // namespace neubm
