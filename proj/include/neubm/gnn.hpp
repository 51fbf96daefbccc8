#pragma once

#include "neubm/dataset.hpp"
#include "neubm/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace neubm {

enum class Architecture { Gcn, Gat };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

struct ModelConfig {
  Architecture architecture = Architecture::Gcn;
  Index input_dim = 0;
  Index hidden_dim = 256;
  int num_classes = 0;
  double dropout = 0.5;
  int num_heads = 1;  // gat only
  std::uint64_t seed = 0;

  void validate() const;
};

/// One named parameter block.
struct Tensor {
  std::string name;
  Matrix value;
};

/// Model weights as named blocks, with a flat-vector view in block order.
///
/// GCN: W0 (input x hidden), W1 (hidden x classes).
/// GAT: per head k of layer 0: W0.hk, a_src0.hk, a_dst0.hk (hidden wide);
///      then W1 (hidden*heads x classes), a_src1, a_dst1 (classes wide).
struct ModelParams {
  ModelConfig config;
  std::vector<Tensor> tensors;

  /// Seeded uniform Glorot initialization.
  static ModelParams initialize(const ModelConfig& config);
  static ModelParams zeros(const ModelConfig& config);

  Index size() const;
  Vector flat() const;
  void set_flat(const Vector& values);

  const Matrix& tensor(const std::string& name) const;
  Matrix& tensor(const std::string& name);
};

/// Precomputed propagation structure for one graph.
struct GraphOperator {
  CsrAdjacency norm_adj;     // D^{-1/2} (A + I) D^{-1/2}
  CsrAdjacency self_looped;  // A + I, neighbourhoods for attention

  static GraphOperator from_graph(const Graph& graph);
};

enum class Mode { Train, Eval };

/// Attention coefficients per self-looped CSR entry, one vector per head and
/// layer. Exposed for diagnostics and tests.
struct AttentionTrace {
  std::vector<std::vector<double>> layer0;  // [head][nnz]
  std::vector<double> layer1;               // [nnz]
};

Matrix gcn_forward(const ModelParams& params, const CsrAdjacency& norm_adj, const Matrix& features, Mode mode,
                   std::uint64_t dropout_seed);

Matrix gat_forward(const ModelParams& params, const CsrAdjacency& self_looped, const Matrix& features, Mode mode,
                   std::uint64_t dropout_seed, AttentionTrace* trace = nullptr);

/// Dispatches on params.config.architecture.
Matrix forward(const ModelParams& params, const GraphOperator& op, const Matrix& features, Mode mode,
               std::uint64_t dropout_seed);

/// Eval-mode logits for a whole graph.
Matrix predict_logits(const ModelParams& params, const Graph& graph);

/// Row-wise numerically stable softmax.
Matrix softmax_rows(const Matrix& logits);

/// Mean negative log-likelihood over `mask` (duplicates count with
/// multiplicity) plus weight_decay * ||params||^2 / 2.
double cross_entropy_loss(const Matrix& logits, std::span<const int> labels, std::span<const Index> mask,
                          double weight_decay, const ModelParams& params);

struct LossGradient {
  double loss = 0.0;
  Vector gradient;  // flat layout of ModelParams
};

/// Loss and its exact gradient by reverse-mode differentiation through the
/// forward pass.
LossGradient loss_and_gradient(const ModelParams& params, const GraphOperator& op, const Matrix& features,
                               std::span<const int> labels, std::span<const Index> mask, double weight_decay,
                               Mode mode, std::uint64_t dropout_seed);

struct AdamOptions {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
};

/// Bias-corrected Adam update in place.
void adam_step(AdamState& state, Vector& params, const Vector& grads, const AdamOptions& options);

struct TrainConfig {
  double learning_rate = 0.005;
  double weight_decay = 5e-4;
  int max_epochs = 500;
  int patience = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  int epochs_run = 0;
  int best_epoch = 0;
  std::vector<double> loss_curve;
  std::vector<double> val_metric_curve;
  double wall_time_seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Validation score used for model selection. Receives eval-mode logits for
/// every node and the 1-based epoch; higher is better.
using ValidationScorer = std::function<double(const ModelParams& params, const Matrix& logits, int epoch)>;

/// Full-batch training with Adam and early stopping on validation F1-macro
/// (or `scorer` when given). Returns the parameters of the best epoch.
TrainResult train(const Graph& graph, const SplitAssignment& split, const ModelConfig& model_config,
                  const TrainConfig& train_config, const ValidationScorer& scorer = {});

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace neubm
