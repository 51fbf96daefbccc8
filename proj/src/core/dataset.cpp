#include "neubm/dataset.hpp"

#include "neubm/error.hpp"
#include "neubm/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace neubm {

namespace fs = std::filesystem;
using nlohmann::json;

void SplitAssignment::apply_to(Graph& graph) const {
  graph.masks["train"] = train;
  graph.masks["val"] = val;
  graph.masks["test"] = test;
}

std::string DatasetSummary::line() const {
  std::ostringstream os;
  os << nodes << " nodes, " << edges << " edges, " << features << " features, " << classes << " classes";
  if (labeled > 0) {
    os << ", rho=" << format_fixed(rho, 4) << " (max/min " << max_class_count << "/" << min_class_count
       << ", min/max=" << format_fixed(rho_inverse, 4) << ")";
  }
  return os.str();
}

DatasetSummary summarize(const Graph& graph) {
  DatasetSummary s;
  s.nodes = graph.num_nodes;
  s.edges = static_cast<Index>(graph.edges.size());
  s.features = graph.num_features();
  s.classes = graph.num_classes;
  s.class_counts.assign(static_cast<std::size_t>(graph.num_classes), 0);
  for (int y : graph.labels) {
    if (y == kUnlabeled) continue;
    ++s.class_counts[static_cast<std::size_t>(y)];
    ++s.labeled;
  }
  Index lo = 0;
  Index hi = 0;
  bool any = false;
  for (Index c : s.class_counts) {
    if (c == 0) continue;
    lo = any ? std::min(lo, c) : c;
    hi = any ? std::max(hi, c) : c;
    any = true;
  }
  if (any) {
    s.min_class_count = lo;
    s.max_class_count = hi;
    s.rho = static_cast<double>(hi) / static_cast<double>(lo);
    s.rho_inverse = static_cast<double>(lo) / static_cast<double>(hi);
  }
  return s;
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trimmed(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Index meta_count(const json& meta, const char* key, const std::string& file) {
  if (!meta.contains(key)) throw ParseError(file, 1, std::string("missing key '") + key + "'");
  const auto& v = meta.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ParseError(file, 1, std::string("key '") + key + "' must be a nonnegative integer");
  }
  return v.get<Index>();
}

}  // namespace

Graph load_canonical(const fs::path& dir) {
  const std::string meta_file = (dir / "meta.json").string();
  json meta;
  {
    auto in = open_input(dir / "meta.json");
    try {
      meta = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(meta_file, 1, std::string("malformed header: ") + e.what());
    }
  }
  if (!meta.is_object()) throw ParseError(meta_file, 1, "malformed header: expected a JSON object");
  Graph g;
  g.num_nodes = meta_count(meta, "num_nodes", meta_file);
  const Index d = meta_count(meta, "num_features", meta_file);
  g.num_classes = static_cast<int>(meta_count(meta, "num_classes", meta_file));
  if (meta.contains("directed") && meta.at("directed") != false) {
    throw ParseError(meta_file, 1, "only undirected graphs (directed=false) are supported");
  }

  const std::string feat_file = (dir / "features.csv").string();
  g.features = Matrix::Zero(g.num_nodes, d);
  {
    auto in = open_input(dir / "features.csv");
    std::string line;
    Index row = 0;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trimmed(line).empty()) continue;
      if (row >= g.num_nodes) throw ParseError(feat_file, lineno, "more feature rows than num_nodes");
      const auto cells = split_commas(line);
      if (static_cast<Index>(cells.size()) != d) {
        throw ParseError(feat_file, lineno,
                         "dimension mismatch: " + std::to_string(cells.size()) + " values, expected " + std::to_string(d));
      }
      for (Index j = 0; j < d; ++j) {
        auto v = parse_real(cells[static_cast<std::size_t>(j)]);
        if (!v) throw ParseError(feat_file, lineno, "not a real number: '" + cells[static_cast<std::size_t>(j)] + "'");
        g.features(row, j) = *v;
      }
      ++row;
    }
    if (row != g.num_nodes) {
      throw ParseError(feat_file, lineno, "dimension mismatch: " + std::to_string(row) + " rows, expected " +
                                              std::to_string(g.num_nodes));
    }
  }

  const std::string edge_file = (dir / "edges.csv").string();
  {
    auto in = open_input(dir / "edges.csv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trimmed(line).empty()) continue;
      const auto cells = split_commas(line);
      if (cells.size() != 2) throw ParseError(edge_file, lineno, "expected 'u,v'");
      auto u = parse_integer(cells[0]);
      auto v = parse_integer(cells[1]);
      if (!u || !v) throw ParseError(edge_file, lineno, "node indices must be integers");
      if (*u < 0 || *v < 0 || *u >= g.num_nodes || *v >= g.num_nodes) {
        throw StructuralError(edge_file + ":" + std::to_string(lineno) + ": edge (" + cells[0] + "," + cells[1] +
                              ") references a node outside [0," + std::to_string(g.num_nodes) + ")");
      }
      if (*u >= *v) throw StructuralError(edge_file + ":" + std::to_string(lineno) + ": edge must satisfy u < v");
      g.edges.emplace_back(*u, *v);
    }
    const auto n_raw = g.edges.size();
    g.edges = canonicalize_edges(std::move(g.edges));
    if (g.edges.size() != n_raw) throw StructuralError(edge_file + ": duplicate edges");
  }

  const fs::path labels_path = dir / "labels.csv";
  if (fs::exists(labels_path)) {
    const std::string label_file = labels_path.string();
    auto in = open_input(labels_path);
    std::string line;
    std::size_t lineno = 0;
    g.labels.reserve(static_cast<std::size_t>(g.num_nodes));
    while (std::getline(in, line)) {
      ++lineno;
      if (trimmed(line).empty()) continue;
      auto y = parse_integer(trimmed(line));
      if (!y) throw ParseError(label_file, lineno, "label must be an integer");
      if (*y != kUnlabeled && (*y < 0 || *y >= g.num_classes)) {
        throw ParseError(label_file, lineno,
                         "label " + std::to_string(*y) + " out of range [0," + std::to_string(g.num_classes) + ")");
      }
      if (static_cast<Index>(g.labels.size()) >= g.num_nodes) throw ParseError(label_file, lineno, "more labels than num_nodes");
      g.labels.push_back(static_cast<int>(*y));
    }
    if (static_cast<Index>(g.labels.size()) != g.num_nodes) {
      throw ParseError(label_file, lineno, "dimension mismatch: " + std::to_string(g.labels.size()) +
                                               " labels, expected " + std::to_string(g.num_nodes));
    }
  }

  const fs::path masks_path = dir / "masks.json";
  if (fs::exists(masks_path)) {
    auto in = open_input(masks_path);
    json masks;
    try {
      masks = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(masks_path.string(), 1, std::string("malformed masks: ") + e.what());
    }
    if (!masks.is_object()) throw ParseError(masks_path.string(), 1, "masks must be a JSON object");
    for (const auto& [name, arr] : masks.items()) {
      if (!arr.is_array()) throw ParseError(masks_path.string(), 1, "mask '" + name + "' must be an array");
      std::vector<Index> idx;
      for (const auto& v : arr) {
        if (!v.is_number_integer()) throw ParseError(masks_path.string(), 1, "mask '" + name + "' holds a non-integer");
        idx.push_back(v.get<Index>());
      }
      std::sort(idx.begin(), idx.end());
      g.masks[name] = std::move(idx);
    }
  }

  try {
    g.validate();
  } catch (const StructuralError&) {
    throw;
  } catch (const DataError& e) {
    throw StructuralError(dir.string() + ": " + e.what());
  }
  return g;
}

void save_canonical(const Graph& graph, const fs::path& dir) {
  graph.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  auto open_output = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };

  {
    json meta = {{"num_nodes", graph.num_nodes},
                 {"num_features", graph.num_features()},
                 {"num_classes", graph.num_classes},
                 {"directed", false}};
    auto out = open_output("meta.json");
    out << meta.dump(2) << "\n";
  }
  {
    auto out = open_output("features.csv");
    std::string line;
    for (Index i = 0; i < graph.num_nodes; ++i) {
      line.clear();
      for (Index j = 0; j < graph.num_features(); ++j) {
        if (j) line += ',';
        line += format_real(graph.features(i, j));
      }
      out << line << '\n';
    }
  }
  {
    auto out = open_output("edges.csv");
    for (const auto& [u, v] : graph.edges) out << u << ',' << v << '\n';
  }
  {
    auto out = open_output("labels.csv");
    for (Index i = 0; i < graph.num_nodes; ++i) {
      out << (graph.has_labels() ? graph.labels[static_cast<std::size_t>(i)] : kUnlabeled) << '\n';
    }
  }
  const fs::path masks_path = dir / "masks.json";
  if (!graph.masks.empty()) {
    json masks = json::object();
    for (const auto& [name, idx] : graph.masks) masks[name] = idx;
    auto out = open_output("masks.json");
    out << masks.dump() << "\n";
  } else if (fs::exists(masks_path)) {
    fs::remove(masks_path);
  }
}

std::vector<Index> sbm_class_sizes(int num_classes, Index total_nodes, double rho) {
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (!(rho >= 1.0)) throw ConfigError("rho must be >= 1");
  if (total_nodes < num_classes) {
    throw ConfigError("infeasible SBM: total_nodes " + std::to_string(total_nodes) + " < num_classes " +
                      std::to_string(num_classes));
  }
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<double> weights(C);
  for (std::size_t c = 0; c < C; ++c) {
    const double t = C == 1 ? 0.0 : static_cast<double>(c) / static_cast<double>(C - 1);
    weights[c] = std::pow(rho, -t);
  }
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<Index> sizes(C);
  std::vector<std::pair<double, std::size_t>> remainders;
  Index assigned = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const double exact = static_cast<double>(total_nodes) * weights[c] / wsum;
    sizes[c] = static_cast<Index>(std::floor(exact));
    assigned += sizes[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  // Largest remainder; ties go to the lower class index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total_nodes; ++k, ++assigned) ++sizes[remainders[k % C].second];
  for (std::size_t c = 0; c < C; ++c) {
    if (sizes[c] == 0) {
      const auto big = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      --sizes[big];
      sizes[c] = 1;
    }
  }
  return sizes;
}

Graph generate_sbm(const SbmConfig& config) {
  if (!(config.p_intra >= 0.0 && config.p_intra <= 1.0 && config.p_inter >= 0.0 && config.p_inter <= 1.0)) {
    throw ConfigError("SBM edge probabilities must lie in [0,1]");
  }
  if (config.p_inter > config.p_intra) throw ConfigError("SBM requires p_inter <= p_intra");
  if (!(config.feature_std > 0.0)) throw ConfigError("feature_std must be > 0");
  if (config.class_mean_separation < 0.0) throw ConfigError("class_mean_separation must be >= 0");
  if (config.feature_dim < config.num_classes) {
    throw ConfigError("feature_dim must be >= num_classes to place equidistant class means");
  }
  const auto sizes = sbm_class_sizes(config.num_classes, config.total_nodes, config.rho);

  Graph g;
  g.num_nodes = config.total_nodes;
  g.num_classes = config.num_classes;
  g.labels.reserve(static_cast<std::size_t>(g.num_nodes));
  for (std::size_t c = 0; c < sizes.size(); ++c) g.labels.insert(g.labels.end(), static_cast<std::size_t>(sizes[c]), static_cast<int>(c));

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.feature_std);
  // Scaled basis vectors are pairwise class_mean_separation apart.
  const double offset = config.class_mean_separation / std::sqrt(2.0);
  g.features = Matrix::Zero(g.num_nodes, config.feature_dim);
  for (Index i = 0; i < g.num_nodes; ++i) {
    for (Index j = 0; j < config.feature_dim; ++j) g.features(i, j) = normal(rng);
    g.features(i, g.labels[static_cast<std::size_t>(i)]) += offset;
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index u = 0; u < g.num_nodes; ++u) {
    const int cu = g.labels[static_cast<std::size_t>(u)];
    for (Index v = u + 1; v < g.num_nodes; ++v) {
      const double p = cu == g.labels[static_cast<std::size_t>(v)] ? config.p_intra : config.p_inter;
      if (unit(rng) < p) g.edges.emplace_back(u, v);
    }
  }
  return g;
}

SplitAssignment stratified_split(const Graph& graph, double train_frac, double val_frac, Index min_per_class,
                                 std::uint64_t seed) {
  if (!graph.has_labels()) throw DataError("stratified split requires labels");
  if (train_frac < 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0) {
    throw ConfigError("split fractions must be nonnegative and sum to at most 1");
  }
  if (min_per_class < 0) throw ConfigError("min_per_class must be >= 0");
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(graph.num_classes));
  for (Index i = 0; i < graph.num_nodes; ++i) {
    const int y = graph.labels[static_cast<std::size_t>(i)];
    if (y != kUnlabeled) by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  SplitAssignment split;
  split.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    const auto size = static_cast<Index>(members.size());
    if (size < min_per_class) {
      throw DataError("infeasible split: class " + std::to_string(c) + " has " + std::to_string(size) +
                      " nodes, fewer than min_per_class=" + std::to_string(min_per_class));
    }
    std::shuffle(members.begin(), members.end(), rng);
    Index n_train = std::max<Index>(std::lround(train_frac * static_cast<double>(size)), min_per_class);
    n_train = std::min(n_train, size);
    const Index n_val = std::min<Index>(std::lround(val_frac * static_cast<double>(size)), size - n_train);
    split.train.insert(split.train.end(), members.begin(), members.begin() + n_train);
    split.val.insert(split.val.end(), members.begin() + n_train, members.begin() + n_train + n_val);
    split.test.insert(split.test.end(), members.begin() + n_train + n_val, members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<SplitAssignment> kfold_splits(const Graph& graph, int k, double train_frac, double val_frac,
                                          Index min_per_class, std::uint64_t seed) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::vector<SplitAssignment> folds;
  folds.reserve(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    auto split = stratified_split(graph, train_frac, val_frac, min_per_class, seed + static_cast<std::uint64_t>(f));
    split.fold_id = f;
    folds.push_back(std::move(split));
  }
  return folds;
}

Graph inject_noise(const Graph& graph, const NoiseSpec& spec) {
  if (!(spec.level >= 0.0 && spec.level <= 1.0)) throw ConfigError("noise level must lie in [0,1]");
  Graph out = graph;
  if (spec.level == 0.0) return out;
  std::mt19937_64 rng(spec.seed);

  if (spec.kind == NoiseKind::Feature) {
    const Index n = graph.num_nodes;
    const Index count = std::lround(spec.level * static_cast<double>(n));
    if (n == 0 || count == 0) return out;
    const Vector mean = graph.features.colwise().mean().transpose();
    Vector std_dev(graph.num_features());
    for (Index j = 0; j < graph.num_features(); ++j) {
      std_dev(j) = std::sqrt((graph.features.col(j).array() - mean(j)).square().mean());
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::sort(order.begin(), order.begin() + count);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index r = 0; r < count; ++r) {
      const Index v = order[static_cast<std::size_t>(r)];
      for (Index j = 0; j < graph.num_features(); ++j) out.features(v, j) += std_dev(j) * normal(rng);
    }
    return out;
  }

  const auto m = static_cast<Index>(graph.edges.size());
  const Index count = std::lround(spec.level * static_cast<double>(m));
  if (count == 0) return out;
  const Index n = graph.num_nodes;
  const Index capacity = n * (n - 1) / 2;
  if (capacity - m < count) {
    throw DataError("structural noise: not enough free node pairs to rewire " + std::to_string(count) + " edges");
  }
  auto key = [n](Index u, Index v) { return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(v); };
  std::unordered_set<std::uint64_t> original;
  original.reserve(graph.edges.size() * 2);
  for (const auto& [u, v] : graph.edges) original.insert(key(u, v));

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> removed(static_cast<std::size_t>(m), false);
  for (Index r = 0; r < count; ++r) removed[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = true;

  std::vector<Edge> edges;
  edges.reserve(graph.edges.size());
  for (Index e = 0; e < m; ++e) {
    if (!removed[static_cast<std::size_t>(e)]) edges.push_back(graph.edges[static_cast<std::size_t>(e)]);
  }
  std::unordered_set<std::uint64_t> added;
  std::uniform_int_distribution<Index> pick(0, n - 1);
  while (static_cast<Index>(added.size()) < count) {
    Index u = pick(rng);
    Index v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    const auto k = key(u, v);
    if (original.count(k) || added.count(k)) continue;
    added.insert(k);
    edges.emplace_back(u, v);
  }
  std::sort(edges.begin(), edges.end());
  out.edges = std::move(edges);
  return out;
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::Feature ? "feature" : "structural"; }

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "feature") return NoiseKind::Feature;
  if (name == "structural") return NoiseKind::Structural;
  throw ConfigError("unknown noise kind '" + name + "'");
}

}  // namespace neubm
