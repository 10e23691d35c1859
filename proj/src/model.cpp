#include "mmec/model.hpp"

#include "mmec/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace mmec {

Matrix positional_encoding(Eigen::Index t_max, Eigen::Index d_model) {
  if (d_model % 2 != 0) throw std::invalid_argument("positional_encoding: d_model must be even");
  Matrix pe(t_max, d_model);
  for (Eigen::Index p = 0; p < t_max; ++p) {
    for (Eigen::Index i = 0; i < d_model / 2; ++i) {
      const double angle =
          static_cast<double>(p) / std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d_model));
      pe(p, 2 * i) = std::sin(angle);
      pe(p, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

void ModelConfig::validate() const {
  if (d_model < 2 || d_model % 2 != 0) throw std::invalid_argument("d_model must be even and >= 2");
  if (heads < 1 || head_dim < 1 || head_hidden < 1) throw std::invalid_argument("head geometry must be positive");
  if (classes < 2) throw std::invalid_argument("classes must be >= 2");
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (peripherals.empty()) throw std::invalid_argument("no peripherals configured");
}

namespace {

Mask causal_mask(Eigen::Index t) {
  Mask m(t, t);
  for (Eigen::Index q = 0; q < t; ++q) {
    for (Eigen::Index k = 0; k < t; ++k) m(q, k) = k <= q;
  }
  return m;
}

Var head_forward(Binder& bind, const HeadBlock& h, Var body) {
  Var hidden = relu(add_row(matmul(body, bind(h.hidden_weight)), bind(h.hidden_bias)));
  return softmax_rows(add_row(matmul(hidden, bind(h.out_weight)), bind(h.out_bias)));
}

}  // namespace

TemporalAttentionResult temporal_attention(Binder& bind, const AttentionBlock& block, int heads, Var input) {
  const Eigen::Index t = input.rows();
  if (t < 1) throw std::invalid_argument("temporal_attention: empty input");
  const Var q = matmul(input, bind(block.query));
  const Var k = matmul(input, bind(block.key));
  const Var v = matmul(input, bind(block.value));
  const Eigen::Index dk = q.cols() / heads;
  const Mask mask = causal_mask(t);

  TemporalAttentionResult r;
  std::vector<Var> outputs;
  for (int h = 0; h < heads; ++h) {
    const Attention a = scaled_dot_attention(slice_cols(q, h * dk, dk), slice_cols(k, h * dk, dk),
                                             slice_cols(v, h * dk, dk), mask);
    outputs.push_back(a.output);
    r.head_weights.push_back(a.weights);
    r.weights = h == 0 ? a.weights : r.weights + a.weights;
  }
  r.weights = (1.0 / heads) * r.weights;
  const Var attended = matmul(heads == 1 ? outputs.front() : concat_cols(outputs), bind(block.output));
  r.output = layer_norm_rows(input + attended, bind(block.norm_gain), bind(block.norm_bias));
  return r;
}

Var gate_spatial_weights(Var spatial_probs, Var temporal_weights, const std::vector<std::size_t>& origin_map) {
  const Eigen::Index s = spatial_probs.cols();
  if (static_cast<std::size_t>(s) != origin_map.size()) {
    throw std::invalid_argument("gate_spatial_weights: origin_map length differs from spatial rows");
  }
  Matrix onehot = Matrix::Zero(temporal_weights.cols(), s);
  for (Eigen::Index k = 0; k < s; ++k) {
    if (static_cast<Eigen::Index>(origin_map[k]) >= temporal_weights.cols()) {
      throw std::invalid_argument("gate_spatial_weights: origin outside temporal range");
    }
    onehot(static_cast<Eigen::Index>(origin_map[k]), k) = 1.0;
  }
  const Var gates = matmul(temporal_weights, spatial_probs.graph().constant(std::move(onehot)));
  return row_normalize(hadamard(spatial_probs, gates));
}

Var gated_spatial_attention(Binder& bind, const AttentionBlock& block, int heads, Var queries, Var spatial,
                            const std::vector<std::size_t>& origin_map, Var temporal_weights) {
  const Var gain = bind(block.norm_gain);
  const Var bias = bind(block.norm_bias);
  const Eigen::Index t = queries.rows();
  if (!spatial.valid() || origin_map.empty()) return layer_norm_rows(queries, gain, bias);

  // Origins are non-decreasing, so queries before the first spatial element
  // see nothing and the rest see a prefix of the spatial rows.
  const auto first = static_cast<Eigen::Index>(origin_map.front());
  if (first >= t) return layer_norm_rows(queries, gain, bias);
  const Eigen::Index active = t - first;

  const Var q_active = matmul(slice_rows(queries, first, active), bind(block.query));
  const Var k = matmul(spatial, bind(block.key));
  const Var v = matmul(spatial, bind(block.value));
  const Var w_active = slice_rows(temporal_weights, first, active);
  const Eigen::Index dk = q_active.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Mask mask(active, static_cast<Eigen::Index>(origin_map.size()));
  for (Eigen::Index r = 0; r < active; ++r) {
    for (std::size_t c = 0; c < origin_map.size(); ++c) {
      mask(r, static_cast<Eigen::Index>(c)) = static_cast<Eigen::Index>(origin_map[c]) <= first + r;
    }
  }

  std::vector<Var> outputs;
  for (int h = 0; h < heads; ++h) {
    const Var scores = scale * matmul_nt(slice_cols(q_active, h * dk, dk), slice_cols(k, h * dk, dk));
    const Var probs = masked_softmax_rows(scores, mask);
    const Var gated = gate_spatial_weights(probs, w_active, origin_map);
    outputs.push_back(matmul(gated, slice_cols(v, h * dk, dk)));
  }
  Var attended = matmul(heads == 1 ? outputs.front() : concat_cols(outputs), bind(block.output));
  if (first > 0) {
    attended = concat_rows({queries.graph().constant(Matrix::Zero(first, queries.cols())), attended});
  }
  return layer_norm_rows(queries + attended, gain, bias);
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, {0x6d6f64656cULL}));
  encoder_ = Encoder(config_.peripherals, config_.d_model, store_, rng);
  for (int l = 0; l < config_.depth; ++l) {
    temporal_.push_back(make_attention("temporal" + std::to_string(l), rng));
    gated_.push_back(make_attention("gated" + std::to_string(l), rng));
  }
  classifier_ = make_head("classifier", config_.classes, rng);
  policy_ = make_head("policy", 2, rng);
}

AttentionBlock Model::make_attention(const std::string& name, Rng& rng) {
  const int d = config_.d_model;
  const int inner = config_.heads * config_.head_dim;
  AttentionBlock b;
  b.query = store_.add(name + ".query", xavier(d, inner, rng));
  b.key = store_.add(name + ".key", xavier(d, inner, rng));
  b.value = store_.add(name + ".value", xavier(d, inner, rng));
  b.output = store_.add(name + ".output", xavier(inner, d, rng));
  b.norm_gain = store_.add(name + ".norm_gain", Matrix::Ones(1, d));
  b.norm_bias = store_.add(name + ".norm_bias", Matrix::Zero(1, d));
  return b;
}

HeadBlock Model::make_head(const std::string& name, int out, Rng& rng) {
  HeadBlock h;
  h.hidden_weight = store_.add(name + ".hidden_weight", xavier(config_.d_model, config_.head_hidden, rng));
  h.hidden_bias = store_.add(name + ".hidden_bias", Matrix::Zero(1, config_.head_hidden));
  h.out_weight = store_.add(name + ".out_weight", xavier(config_.head_hidden, out, rng));
  h.out_bias = store_.add(name + ".out_bias", Matrix::Zero(1, out));
  return h;
}

StepOutputs Model::forward(Graph& g, const MultimodalSequence& seq) {
  Binder bind(g, store_);
  const CacheSet cache = build_caches(bind, seq.elements, encoder_);
  const Eigen::Index t = static_cast<Eigen::Index>(cache.length());
  Var body = cache.temporal + g.constant(positional_encoding(t, config_.d_model));
  for (std::size_t l = 0; l < temporal_.size(); ++l) {
    const TemporalAttentionResult temporal = temporal_attention(bind, temporal_[l], config_.heads, body);
    body = gated_spatial_attention(bind, gated_[l], config_.heads, temporal.output, cache.spatial,
                                   cache.origin_map, temporal.weights);
  }
  return {head_forward(bind, classifier_, body), head_forward(bind, policy_, body)};
}

StepValues Model::predict(const MultimodalSequence& seq) {
  Graph g(false);
  const StepOutputs out = forward(g, seq);
  return {out.y_hat.value(), out.pi.value()};
}

std::vector<std::size_t> Model::classifier_params() const {
  return {classifier_.hidden_weight, classifier_.hidden_bias, classifier_.out_weight, classifier_.out_bias};
}

std::vector<std::size_t> Model::policy_params() const {
  return {policy_.hidden_weight, policy_.hidden_bias, policy_.out_weight, policy_.out_bias};
}

}  // namespace mmec
