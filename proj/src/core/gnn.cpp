#include "neubm/gnn.hpp"

#include "neubm/error.hpp"
#include "neubm/metrics.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace neubm {

namespace {

constexpr double kLeakySlope = 0.2;

using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

void glorot_fill(Matrix& m, Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
  }
}

std::vector<Tensor> tensor_layout(const ModelConfig& c) {
  std::vector<Tensor> t;
  const Index C = c.num_classes;
  if (c.architecture == Architecture::Gcn) {
    t.push_back({"W0", Matrix::Zero(c.input_dim, c.hidden_dim)});
    t.push_back({"W1", Matrix::Zero(c.hidden_dim, C)});
    return t;
  }
  for (int h = 0; h < c.num_heads; ++h) {
    const std::string suffix = ".h" + std::to_string(h);
    t.push_back({"W0" + suffix, Matrix::Zero(c.input_dim, c.hidden_dim)});
    t.push_back({"a_src0" + suffix, Matrix::Zero(1, c.hidden_dim)});
    t.push_back({"a_dst0" + suffix, Matrix::Zero(1, c.hidden_dim)});
  }
  t.push_back({"W1", Matrix::Zero(c.hidden_dim * c.num_heads, C)});
  t.push_back({"a_src1", Matrix::Zero(1, C)});
  t.push_back({"a_dst1", Matrix::Zero(1, C)});
  return t;
}

/// Inverted-dropout multiplier matrix (0 or 1/(1-p)).
Matrix dropout_mask(Index rows, Index cols, double p, std::uint64_t seed) {
  Matrix mask = Matrix::Constant(rows, cols, 1.0);
  if (p <= 0.0) return mask;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) mask(i, j) = keep(rng) ? scale : 0.0;
  }
  return mask;
}

void check_features(const ModelParams& params, const Matrix& features, Index nodes) {
  if (features.cols() != params.config.input_dim) {
    throw DataError("feature width " + std::to_string(features.cols()) + " does not match model input_dim " +
                    std::to_string(params.config.input_dim));
  }
  if (features.rows() != nodes) {
    throw DataError("feature rows " + std::to_string(features.rows()) + " do not match graph size " + std::to_string(nodes));
  }
}

// ---- GCN ----------------------------------------------------------------

struct GcnCache {
  Matrix propagated_input;  // A X
  Matrix pre_activation;    // A X W0
  Matrix dropout;           // multiplier
  Matrix hidden;            // relu(pre) * dropout
  Matrix propagated_hidden; // A hidden
};

Matrix gcn_forward_cached(const ModelParams& params, const CsrAdjacency& adj, const Matrix& x, Mode mode,
                          std::uint64_t seed, GcnCache& cache) {
  check_features(params, x, adj.rows());
  const Matrix& w0 = params.tensor("W0");
  const Matrix& w1 = params.tensor("W1");
  cache.propagated_input = adj.multiply(x);
  cache.pre_activation = cache.propagated_input * w0;
  cache.dropout = mode == Mode::Train ? dropout_mask(x.rows(), w0.cols(), params.config.dropout, seed)
                                      : Matrix::Constant(x.rows(), w0.cols(), 1.0);
  cache.hidden = cache.pre_activation.cwiseMax(0.0).cwiseProduct(cache.dropout);
  cache.propagated_hidden = adj.multiply(cache.hidden);
  return cache.propagated_hidden * w1;
}

void gcn_backward(const ModelParams& params, const CsrAdjacency& adj, const GcnCache& cache, const Matrix& d_logits,
                  ModelParams& grad) {
  const Matrix& w1 = params.tensor("W1");
  grad.tensor("W1") = cache.propagated_hidden.transpose() * d_logits;
  const Matrix d_hidden = adj.multiply_transposed(d_logits * w1.transpose());
  Matrix d_pre = d_hidden.cwiseProduct(cache.dropout);
  d_pre = (cache.pre_activation.array() > 0.0).select(d_pre, 0.0);
  grad.tensor("W0") = cache.propagated_input.transpose() * d_pre;
}

// ---- GAT ----------------------------------------------------------------

struct AttentionCache {
  Matrix transformed;          // H W
  std::vector<double> scores;  // pre-LeakyReLU, per CSR entry
  std::vector<double> alpha;   // softmax over each row
};

Matrix attention_forward(const CsrAdjacency& s, const Matrix& input, const Matrix& w, const RowVector& a_src,
                         const RowVector& a_dst, AttentionCache& cache) {
  cache.transformed = input * w;
  const Vector f_src = cache.transformed * a_src.transpose();
  const Vector f_dst = cache.transformed * a_dst.transpose();
  const auto nnz = static_cast<std::size_t>(s.nnz());
  cache.scores.assign(nnz, 0.0);
  cache.alpha.assign(nnz, 0.0);
  Matrix out = Matrix::Zero(input.rows(), w.cols());
  for (Index i = 0; i < s.rows(); ++i) {
    const Index begin = s.row_offsets[i];
    const Index end = s.row_offsets[i + 1];
    if (begin == end) continue;
    double peak = -std::numeric_limits<double>::infinity();
    for (Index k = begin; k < end; ++k) {
      const double score = f_dst(i) + f_src(s.col_indices[k]);
      cache.scores[k] = score;
      cache.alpha[k] = score > 0.0 ? score : kLeakySlope * score;
      peak = std::max(peak, cache.alpha[k]);
    }
    double total = 0.0;
    for (Index k = begin; k < end; ++k) {
      cache.alpha[k] = std::exp(cache.alpha[k] - peak);
      total += cache.alpha[k];
    }
    for (Index k = begin; k < end; ++k) {
      cache.alpha[k] /= total;
      out.row(i).noalias() += cache.alpha[k] * cache.transformed.row(s.col_indices[k]);
    }
  }
  return out;
}

struct AttentionGrad {
  Matrix d_input;
  Matrix d_w;
  RowVector d_src;
  RowVector d_dst;
};

AttentionGrad attention_backward(const CsrAdjacency& s, const Matrix& input, const Matrix& w, const RowVector& a_src,
                                 const RowVector& a_dst, const AttentionCache& cache, const Matrix& d_out) {
  const Matrix& g = cache.transformed;
  Matrix d_g = Matrix::Zero(g.rows(), g.cols());
  Vector d_fsrc = Vector::Zero(g.rows());
  Vector d_fdst = Vector::Zero(g.rows());
  std::vector<double> d_alpha;
  for (Index i = 0; i < s.rows(); ++i) {
    const Index begin = s.row_offsets[i];
    const Index end = s.row_offsets[i + 1];
    d_alpha.assign(static_cast<std::size_t>(end - begin), 0.0);
    double weighted = 0.0;
    for (Index k = begin; k < end; ++k) {
      const Index j = s.col_indices[k];
      const double da = d_out.row(i).dot(g.row(j));
      d_alpha[static_cast<std::size_t>(k - begin)] = da;
      weighted += cache.alpha[k] * da;
      d_g.row(j).noalias() += cache.alpha[k] * d_out.row(i);
    }
    for (Index k = begin; k < end; ++k) {
      const double d_e = cache.alpha[k] * (d_alpha[static_cast<std::size_t>(k - begin)] - weighted);
      const double d_s = cache.scores[k] > 0.0 ? d_e : kLeakySlope * d_e;
      d_fdst(i) += d_s;
      d_fsrc(s.col_indices[k]) += d_s;
    }
  }
  AttentionGrad out;
  out.d_src = d_fsrc.transpose() * g;
  out.d_dst = d_fdst.transpose() * g;
  d_g.noalias() += d_fsrc * a_src;
  d_g.noalias() += d_fdst * a_dst;
  out.d_w = input.transpose() * d_g;
  out.d_input = d_g * w.transpose();
  return out;
}

struct GatCache {
  std::vector<AttentionCache> heads;
  Matrix pre_activation;  // concatenated head outputs
  Matrix dropout;
  Matrix hidden;
  AttentionCache output;
};

std::string head_name(const char* base, int h) { return std::string(base) + ".h" + std::to_string(h); }

Matrix gat_forward_cached(const ModelParams& params, const CsrAdjacency& s, const Matrix& x, Mode mode,
                          std::uint64_t seed, GatCache& cache) {
  check_features(params, x, s.rows());
  const auto& cfg = params.config;
  const Index hd = cfg.hidden_dim;
  cache.heads.resize(static_cast<std::size_t>(cfg.num_heads));
  cache.pre_activation = Matrix::Zero(x.rows(), hd * cfg.num_heads);
  for (int h = 0; h < cfg.num_heads; ++h) {
    cache.pre_activation.middleCols(h * hd, hd) =
        attention_forward(s, x, params.tensor(head_name("W0", h)), params.tensor(head_name("a_src0", h)),
                          params.tensor(head_name("a_dst0", h)), cache.heads[static_cast<std::size_t>(h)]);
  }
  cache.dropout = mode == Mode::Train ? dropout_mask(x.rows(), hd * cfg.num_heads, cfg.dropout, seed)
                                      : Matrix::Constant(x.rows(), hd * cfg.num_heads, 1.0);
  cache.hidden = cache.pre_activation.cwiseMax(0.0).cwiseProduct(cache.dropout);
  return attention_forward(s, cache.hidden, params.tensor("W1"), params.tensor("a_src1"), params.tensor("a_dst1"),
                           cache.output);
}

void gat_backward(const ModelParams& params, const CsrAdjacency& s, const Matrix& x, const GatCache& cache,
                  const Matrix& d_logits, ModelParams& grad) {
  const auto& cfg = params.config;
  const Index hd = cfg.hidden_dim;
  auto top = attention_backward(s, cache.hidden, params.tensor("W1"), params.tensor("a_src1"), params.tensor("a_dst1"),
                                cache.output, d_logits);
  grad.tensor("W1") = top.d_w;
  grad.tensor("a_src1") = top.d_src;
  grad.tensor("a_dst1") = top.d_dst;
  Matrix d_pre = top.d_input.cwiseProduct(cache.dropout);
  d_pre = (cache.pre_activation.array() > 0.0).select(d_pre, 0.0);
  for (int h = 0; h < cfg.num_heads; ++h) {
    const Matrix d_head = d_pre.middleCols(h * hd, hd);
    auto g = attention_backward(s, x, params.tensor(head_name("W0", h)), params.tensor(head_name("a_src0", h)),
                                params.tensor(head_name("a_dst0", h)), cache.heads[static_cast<std::size_t>(h)], d_head);
    grad.tensor(head_name("W0", h)) = g.d_w;
    grad.tensor(head_name("a_src0", h)) = g.d_src;
    grad.tensor(head_name("a_dst0", h)) = g.d_dst;
  }
}

void check_mask(std::span<const int> labels, std::span<const Index> mask, Index rows, int classes) {
  if (mask.empty()) throw DataError("loss over an empty mask");
  if (static_cast<Index>(labels.size()) != rows) throw DataError("label vector length differs from logits rows");
  for (Index v : mask) {
    if (v < 0 || v >= rows) throw DataError("mask index " + std::to_string(v) + " out of range");
    const int y = labels[static_cast<std::size_t>(v)];
    if (y < 0 || y >= classes) throw DataError("masked node " + std::to_string(v) + " has no valid label");
  }
}

double squared_norm(const ModelParams& params) {
  double sum = 0.0;
  for (const auto& t : params.tensors) sum += t.value.squaredNorm();
  return sum;
}

double log_sum_exp(const Matrix& logits, Index row) {
  const double peak = logits.row(row).maxCoeff();
  return peak + std::log((logits.row(row).array() - peak).exp().sum());
}

}  // namespace

std::string to_string(Architecture arch) { return arch == Architecture::Gcn ? "gcn" : "gat"; }

Architecture architecture_from_string(const std::string& name) {
  if (name == "gcn") return Architecture::Gcn;
  if (name == "gat") return Architecture::Gat;
  throw ConfigError("unknown architecture '" + name + "'");
}

void ModelConfig::validate() const {
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
  if (architecture == Architecture::Gat && num_heads < 1) throw ConfigError("num_heads must be >= 1");
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  if (p.config.architecture == Architecture::Gcn) p.config.num_heads = 1;
  p.tensors = tensor_layout(p.config);
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& config) {
  ModelParams p = zeros(config);
  std::mt19937_64 rng(config.seed);
  for (auto& t : p.tensors) {
    if (t.name.starts_with("a_")) {
      glorot_fill(t.value, t.value.cols(), 1, rng);
    } else {
      glorot_fill(t.value, t.value.rows(), t.value.cols(), rng);
    }
  }
  return p;
}

Index ModelParams::size() const {
  Index n = 0;
  for (const auto& t : tensors) n += t.value.size();
  return n;
}

Vector ModelParams::flat() const {
  Vector out(size());
  Index offset = 0;
  for (const auto& t : tensors) {
    out.segment(offset, t.value.size()) = t.value.reshaped<Eigen::RowMajor>();
    offset += t.value.size();
  }
  return out;
}

void ModelParams::set_flat(const Vector& values) {
  if (values.size() != size()) {
    throw DataError("flat parameter vector has " + std::to_string(values.size()) + " entries, expected " +
                    std::to_string(size()));
  }
  Index offset = 0;
  for (auto& t : tensors) {
    t.value.reshaped<Eigen::RowMajor>() = values.segment(offset, t.value.size());
    offset += t.value.size();
  }
}

const Matrix& ModelParams::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw DataError("model has no parameter block '" + name + "'");
}

Matrix& ModelParams::tensor(const std::string& name) {
  return const_cast<Matrix&>(static_cast<const ModelParams&>(*this).tensor(name));
}

GraphOperator GraphOperator::from_graph(const Graph& graph) {
  GraphOperator op;
  op.self_looped = build_adjacency(graph, true);
  op.norm_adj = symmetric_normalize(op.self_looped);
  return op;
}

Matrix gcn_forward(const ModelParams& params, const CsrAdjacency& norm_adj, const Matrix& features, Mode mode,
                   std::uint64_t dropout_seed) {
  if (params.config.architecture != Architecture::Gcn) throw ConfigError("gcn_forward called with a non-GCN model");
  GcnCache cache;
  return gcn_forward_cached(params, norm_adj, features, mode, dropout_seed, cache);
}

Matrix gat_forward(const ModelParams& params, const CsrAdjacency& self_looped, const Matrix& features, Mode mode,
                   std::uint64_t dropout_seed, AttentionTrace* trace) {
  if (params.config.architecture != Architecture::Gat) throw ConfigError("gat_forward called with a non-GAT model");
  GatCache cache;
  Matrix logits = gat_forward_cached(params, self_looped, features, mode, dropout_seed, cache);
  if (trace) {
    trace->layer0.clear();
    for (const auto& h : cache.heads) trace->layer0.push_back(h.alpha);
    trace->layer1 = cache.output.alpha;
  }
  return logits;
}

Matrix forward(const ModelParams& params, const GraphOperator& op, const Matrix& features, Mode mode,
               std::uint64_t dropout_seed) {
  if (params.config.architecture == Architecture::Gcn) {
    return gcn_forward(params, op.norm_adj, features, mode, dropout_seed);
  }
  return gat_forward(params, op.self_looped, features, mode, dropout_seed);
}

Matrix predict_logits(const ModelParams& params, const Graph& graph) {
  return forward(params, GraphOperator::from_graph(graph), graph.features, Mode::Eval, 0);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - peak).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double cross_entropy_loss(const Matrix& logits, std::span<const int> labels, std::span<const Index> mask,
                          double weight_decay, const ModelParams& params) {
  check_mask(labels, mask, logits.rows(), static_cast<int>(logits.cols()));
  double nll = 0.0;
  for (Index v : mask) nll += log_sum_exp(logits, v) - logits(v, labels[static_cast<std::size_t>(v)]);
  return nll / static_cast<double>(mask.size()) + 0.5 * weight_decay * squared_norm(params);
}

LossGradient loss_and_gradient(const ModelParams& params, const GraphOperator& op, const Matrix& features,
                               std::span<const int> labels, std::span<const Index> mask, double weight_decay,
                               Mode mode, std::uint64_t dropout_seed) {
  const bool gcn = params.config.architecture == Architecture::Gcn;
  GcnCache gcn_cache;
  GatCache gat_cache;
  const Matrix logits = gcn ? gcn_forward_cached(params, op.norm_adj, features, mode, dropout_seed, gcn_cache)
                            : gat_forward_cached(params, op.self_looped, features, mode, dropout_seed, gat_cache);
  LossGradient out;
  out.loss = cross_entropy_loss(logits, labels, mask, weight_decay, params);

  const Matrix probs = softmax_rows(logits);
  Matrix d_logits = Matrix::Zero(logits.rows(), logits.cols());
  const double scale = 1.0 / static_cast<double>(mask.size());
  for (Index v : mask) {
    d_logits.row(v) += scale * probs.row(v);
    d_logits(v, labels[static_cast<std::size_t>(v)]) -= scale;
  }

  ModelParams grad = ModelParams::zeros(params.config);
  if (gcn) {
    gcn_backward(params, op.norm_adj, gcn_cache, d_logits, grad);
  } else {
    gat_backward(params, op.self_looped, features, gat_cache, d_logits, grad);
  }
  for (std::size_t t = 0; t < grad.tensors.size(); ++t) {
    grad.tensors[t].value += weight_decay * params.tensors[t].value;
    if (!grad.tensors[t].value.allFinite()) {
      throw NumericError("non-finite gradient in parameter block '" + grad.tensors[t].name + "'");
    }
  }
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");
  out.gradient = grad.flat();
  return out;
}

void adam_step(AdamState& state, Vector& params, const Vector& grads, const AdamOptions& options) {
  if (grads.size() != params.size()) throw DataError("gradient and parameter sizes differ");
  if (state.m.size() != params.size()) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = options.beta1 * state.m + (1.0 - options.beta1) * grads;
  state.v = options.beta2 * state.v + (1.0 - options.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  for (Index i = 0; i < params.size(); ++i) {
    const double m_hat = state.m(i) / c1;
    const double v_hat = state.v(i) / c2;
    params(i) -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 0 || patience > max_epochs) throw ConfigError("patience must lie in [0, max_epochs]");
}

TrainResult train(const Graph& graph, const SplitAssignment& split, const ModelConfig& model_config,
                  const TrainConfig& train_config, const ValidationScorer& scorer) {
  train_config.validate();
  if (!graph.has_labels()) throw DataError("training requires labels");
  if (split.train.empty()) throw DataError("training requires a nonempty train split");
  const auto start = std::chrono::steady_clock::now();

  const GraphOperator op = GraphOperator::from_graph(graph);
  ModelParams params = ModelParams::initialize(model_config);
  Vector flat = params.flat();
  AdamState adam;
  const AdamOptions adam_options{train_config.learning_rate};

  // Without a validation split, selection falls back to training F1.
  const std::vector<Index>& selection = split.val.empty() ? split.train : split.val;
  std::vector<int> selection_truth;
  for (Index v : selection) selection_truth.push_back(graph.labels[static_cast<std::size_t>(v)]);

  auto default_score = [&](const Matrix& logits) {
    std::vector<int> pred;
    pred.reserve(selection.size());
    for (Index v : selection) pred.push_back(argmax_row(logits, v));
    return f1_scores(confusion(pred, selection_truth, graph.num_classes)).f1_macro;
  };

  TrainResult result{params, {}};
  double best = -std::numeric_limits<double>::infinity();
  int stale = 0;
  std::mt19937_64 seeds(train_config.seed);
  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    const std::uint64_t dropout_seed = seeds();
    LossGradient lg;
    try {
      lg = loss_and_gradient(params, op, graph.features, graph.labels, split.train, train_config.weight_decay,
                             Mode::Train, dropout_seed);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    adam_step(adam, flat, lg.gradient, adam_options);
    params.set_flat(flat);
    if (!flat.allFinite()) throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": non-finite parameters");

    const Matrix logits = forward(params, op, graph.features, Mode::Eval, 0);
    const double score = scorer ? scorer(params, logits, epoch) : default_score(logits);
    result.report.loss_curve.push_back(lg.loss);
    result.report.val_metric_curve.push_back(score);
    result.report.epochs_run = epoch;
    if (score > best) {
      best = score;
      stale = 0;
      result.params = params;
      result.report.best_epoch = epoch;
    } else if (++stale > train_config.patience) {
      break;
    }
  }
  result.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const auto& c = params.config;
  nlohmann::json j;
  j["format"] = "neubm-checkpoint";
  j["version"] = 1;
  j["model"] = {{"architecture", to_string(c.architecture)},
                {"input_dim", c.input_dim},
                {"hidden_dim", c.hidden_dim},
                {"num_classes", c.num_classes},
                {"dropout", c.dropout},
                {"num_heads", c.num_heads},
                {"seed", c.seed}};
  j["seed"] = c.seed;
  const Vector flat = params.flat();
  j["params"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << j.dump() << "\n";
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.at("format") != "neubm-checkpoint") throw DataError(path.string() + ": not a checkpoint file");
    if (j.at("version") != 1) throw DataError(path.string() + ": unsupported checkpoint version");
    const auto& m = j.at("model");
    ModelConfig c;
    c.architecture = architecture_from_string(m.at("architecture").get<std::string>());
    c.input_dim = m.at("input_dim").get<Index>();
    c.hidden_dim = m.at("hidden_dim").get<Index>();
    c.num_classes = m.at("num_classes").get<int>();
    c.dropout = m.at("dropout").get<double>();
    c.num_heads = m.at("num_heads").get<int>();
    c.seed = m.at("seed").get<std::uint64_t>();
    ModelParams p = ModelParams::zeros(c);
    const auto values = j.at("params").get<std::vector<double>>();
    p.set_flat(Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size())));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace neubm
