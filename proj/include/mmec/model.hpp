#pragma once

#include "mmec/encoder.hpp"
#include "mmec/graph.hpp"
#include "mmec/params.hpp"
#include "mmec/sequence.hpp"

#include <cstdint>
#include <vector>

namespace mmec {

/// Sinusoidal encoding: row p, columns (2i, 2i+1) = (sin, cos)(p / 10000^(2i/d)).
/// Throws for odd d_model.
Matrix positional_encoding(Eigen::Index t_max, Eigen::Index d_model);

struct ModelConfig {
  int d_model = 32;
  int heads = 8;
  int head_dim = 64;
  int head_hidden = 100;
  int classes = 2;
  /// Number of (temporal attention, gated spatial attention) block pairs.
  int depth = 1;
  std::uint64_t seed = 0;
  std::vector<PeripheralSpec> peripherals;

  void validate() const;
};

/// Parameter indices of one multi-head attention block with its residual
/// layer norm. Projections carry no bias.
struct AttentionBlock {
  std::size_t query = 0, key = 0, value = 0, output = 0;
  std::size_t norm_gain = 0, norm_bias = 0;
};

/// Feed-forward head: hidden ReLU layer then softmax.
struct HeadBlock {
  std::size_t hidden_weight = 0, hidden_bias = 0, out_weight = 0, out_bias = 0;
};

struct TemporalAttentionResult {
  Var output;
  /// Head-averaged causal weights, (t, t).
  Var weights;
  std::vector<Var> head_weights;
};

/// Causal multi-head self-attention over the temporal cache followed by
/// layer_norm(input + attention).
TemporalAttentionResult temporal_attention(Binder& bind, const AttentionBlock& block, int heads, Var input);

/// Gated spatial probabilities: p'(t,k) proportional to p(t,k) * w(t, origin(k)).
/// `spatial_probs` is (queries, S), `temporal_weights` is (queries, T).
Var gate_spatial_weights(Var spatial_probs, Var temporal_weights, const std::vector<std::size_t>& origin_map);

/// Queries attend to spatial rows whose origin is not after the query step;
/// attention weights are gated by the head-averaged temporal weights. Query
/// rows with no admissible spatial row receive layer_norm(input).
Var gated_spatial_attention(Binder& bind, const AttentionBlock& block, int heads, Var queries, Var spatial,
                            const std::vector<std::size_t>& origin_map, Var temporal_weights);

/// Per-step predictions for every prefix s_1..s_T of a sequence.
struct StepOutputs {
  /// (T_end, C) class distributions.
  Var y_hat;
  /// (T_end, 2) action distributions; column 0 = wait, 1 = stop.
  Var pi;
};

/// Plain-value copy of StepOutputs.
struct StepValues {
  Matrix y_hat;
  Matrix pi;
};

/// Spatial-temporal transformer with a classifier head and a policy head
/// sharing one body.
class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const Encoder& encoder() const { return encoder_; }

  /// All T_end prefixes in one causal pass.
  StepOutputs forward(Graph& g, const MultimodalSequence& seq);
  /// Inference without recording gradients.
  StepValues predict(const MultimodalSequence& seq);

  std::vector<std::size_t> classifier_params() const;
  std::vector<std::size_t> policy_params() const;

 private:
  AttentionBlock make_attention(const std::string& name, Rng& rng);
  HeadBlock make_head(const std::string& name, int out, Rng& rng);

  ModelConfig config_;
  ParameterStore store_;
  Encoder encoder_;
  std::vector<AttentionBlock> temporal_;
  std::vector<AttentionBlock> gated_;
  HeadBlock classifier_;
  HeadBlock policy_;
};

}  // namespace mmec
