#include "mmec/gradcheck.hpp"
#include "mmec/model.hpp"
#include "mmec/objectives.hpp"
#include "mmec/ops.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace mmec {
namespace {

using testing::random_image;
using testing::random_sequence;
using testing::random_text;
using testing::tiny_model_config;

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

MultimodalSequence prefix(const MultimodalSequence& s, std::size_t t) {
  MultimodalSequence p;
  p.elements.assign(s.elements.begin(), s.elements.begin() + static_cast<std::ptrdiff_t>(t));
  p.label = s.label;
  return p;
}

TEST(PositionalEncoding, RowZeroAlternates) {
  const Matrix pe = positional_encoding(3, 6);
  EXPECT_EQ(Matrix(pe.row(0)), row({0, 1, 0, 1, 0, 1}));
}

TEST(PositionalEncoding, BoundedByOne) {
  const Matrix pe = positional_encoding(200, 32);
  EXPECT_LE(pe.cwiseAbs().maxCoeff(), 1.0);
}

TEST(PositionalEncoding, PositionOneFirstPair) {
  const Matrix pe = positional_encoding(2, 4);
  EXPECT_NEAR(pe(1, 0), 0.8414709848078965, 1e-15);
  EXPECT_NEAR(pe(1, 1), 0.5403023058681398, 1e-15);
  // i = 1: angle 1 / 10000^(2/4) = 0.01
  EXPECT_NEAR(pe(1, 2), std::sin(0.01), 1e-15);
}

TEST(PositionalEncoding, OddWidthThrows) { EXPECT_THROW(positional_encoding(3, 5), std::invalid_argument); }

struct Blocks {
  Blocks() {
    Rng rng(31);
    attention.query = store.add("q", xavier(8, 8, rng));
    attention.key = store.add("k", xavier(8, 8, rng));
    attention.value = store.add("v", xavier(8, 8, rng));
    attention.output = store.add("o", xavier(8, 8, rng));
    attention.norm_gain = store.add("g", Matrix::Ones(1, 8));
    attention.norm_bias = store.add("b", Matrix::Zero(1, 8));
  }
  ParameterStore store;
  AttentionBlock attention;
};

Matrix random_rows(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * uniform01(rng) - 1.0;
  return m;
}

TEST(TemporalAttention, SinglePosition) {
  Blocks b;
  Graph g;
  Binder bind(g, b.store);
  Rng rng(1);
  const Var x = g.constant(random_rows(1, 8, rng));
  const TemporalAttentionResult r = temporal_attention(bind, b.attention, 2, x);
  EXPECT_DOUBLE_EQ(r.weights.value()(0, 0), 1.0);
  const Matrix& wv = b.store.at(b.attention.value).value;
  const Matrix& wo = b.store.at(b.attention.output).value;
  const Var expected = layer_norm_rows(x + g.constant(x.value() * wv * wo), g.constant(Matrix::Ones(1, 8)),
                                       g.constant(Matrix::Zero(1, 8)));
  EXPECT_LT((r.output.value() - expected.value()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TemporalAttention, CausalAndNormalized) {
  Blocks b;
  Graph g;
  Binder bind(g, b.store);
  Rng rng(2);
  const TemporalAttentionResult r = temporal_attention(bind, b.attention, 4, g.constant(random_rows(6, 8, rng)));
  ASSERT_EQ(r.head_weights.size(), 4u);
  for (Eigen::Index q = 0; q < 6; ++q) {
    EXPECT_NEAR(r.weights.value().row(q).sum(), 1.0, 1e-9);
    for (Eigen::Index k = q + 1; k < 6; ++k) {
      EXPECT_EQ(r.weights.value()(q, k), 0.0);
      for (const Var& h : r.head_weights) EXPECT_EQ(h.value()(q, k), 0.0);
    }
  }
}

TEST(Gating, HandWorkedExample) {
  Graph g;
  const Var gated = gate_spatial_weights(g.constant(row({0.25, 0.25, 0.25, 0.25})), g.constant(row({0.8, 0.2})),
                                         {0, 0, 1, 1});
  EXPECT_LT((gated.value() - row({0.4, 0.4, 0.1, 0.1})).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Gating, UniformTemporalWeightsAreIdentity) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g;
    const Matrix p = softmax(random_rows(1, 6, rng));
    const Var gated = gate_spatial_weights(g.constant(p), g.constant(row({1.0 / 3, 1.0 / 3, 1.0 / 3})),
                                           {0, 0, 1, 1, 2, 2});
    EXPECT_LT((gated.value() - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gating, ResultIsDistribution) {
  Rng rng(4);
  Graph g;
  const Matrix p = softmax(random_rows(3, 5, rng));
  const Matrix w = softmax(random_rows(3, 4, rng));
  const Var gated = gate_spatial_weights(g.constant(p), g.constant(w), {0, 1, 1, 3, 3});
  for (Eigen::Index r = 0; r < 3; ++r) EXPECT_NEAR(gated.value().row(r).sum(), 1.0, 1e-12);
  EXPECT_GE(gated.value().minCoeff(), 0.0);
}

TEST(Gating, OriginMapLengthMismatchThrows) {
  Graph g;
  EXPECT_THROW(gate_spatial_weights(g.constant(row({0.5, 0.5})), g.constant(row({1.0})), {0}),
               std::invalid_argument);
}

TEST(GatedAttention, NoSpatialCacheIsLayerNormPassThrough) {
  Blocks b;
  Graph g;
  Binder bind(g, b.store);
  Rng rng(5);
  const Var q = g.constant(random_rows(3, 8, rng));
  const Var w = g.constant(Matrix::Constant(3, 3, 1.0 / 3));
  const Var out = gated_spatial_attention(bind, b.attention, 2, q, Var(), {}, w);
  const Var ln = layer_norm_rows(q, g.constant(Matrix::Ones(1, 8)), g.constant(Matrix::Zero(1, 8)));
  EXPECT_EQ(out.value(), ln.value());
}

TEST(GatedAttention, QueriesBeforeFirstImagePassThrough) {
  Blocks b;
  Graph g;
  Binder bind(g, b.store);
  Rng rng(6);
  const Var q = g.constant(random_rows(4, 8, rng));
  const Var spatial = g.constant(random_rows(3, 8, rng));
  const Var w = g.constant(softmax(random_rows(4, 4, rng)));
  const Var out = gated_spatial_attention(bind, b.attention, 2, q, spatial, {2, 2, 2}, w);
  const Var ln = layer_norm_rows(q, g.constant(Matrix::Ones(1, 8)), g.constant(Matrix::Zero(1, 8)));
  EXPECT_LT((out.value().topRows(2) - ln.value().topRows(2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((out.value().bottomRows(2) - ln.value().bottomRows(2)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Model, AllTextSequenceRuns) {
  Model m(tiny_model_config());
  Rng rng(7);
  MultimodalSequence s{{random_text(rng), random_text(rng), random_text(rng)}, one_hot(0, 2)};
  const StepValues v = m.predict(s);
  EXPECT_EQ(v.y_hat.rows(), 3);
  EXPECT_EQ(v.pi.cols(), 2);
}

TEST(Model, OutputsAreDistributions) {
  Model m(tiny_model_config());
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const MultimodalSequence s = random_sequence(rng, 1 + static_cast<std::size_t>(trial % 7));
    const StepValues v = m.predict(s);
    ASSERT_EQ(v.y_hat.rows(), static_cast<Eigen::Index>(s.t_end()));
    for (Eigen::Index t = 0; t < v.y_hat.rows(); ++t) {
      EXPECT_NEAR(v.y_hat.row(t).sum(), 1.0, 1e-9);
      EXPECT_NEAR(v.pi.row(t).sum(), 1.0, 1e-9);
    }
    EXPECT_GE(v.y_hat.minCoeff(), 0.0);
    EXPECT_GE(v.pi.minCoeff(), 0.0);
  }
}

TEST(Model, PrefixInvariance) {
  Model m(tiny_model_config());
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const MultimodalSequence s5 = random_sequence(rng, 5);
    const StepValues full = m.predict(s5);
    const StepValues pre = m.predict(prefix(s5, 3));
    EXPECT_LT((full.y_hat.topRows(3) - pre.y_hat).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((full.pi.topRows(3) - pre.pi).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Model, SuffixPermutationLeavesPrefixRowsUnchanged) {
  Model m(tiny_model_config());
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    MultimodalSequence s = random_sequence(rng, 7, 0.5);
    const StepValues before = m.predict(s);
    std::shuffle(s.elements.begin() + 3, s.elements.end(), rng);
    const StepValues after = m.predict(s);
    EXPECT_LT((before.y_hat.topRows(3) - after.y_hat.topRows(3)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((before.pi.topRows(3) - after.pi.topRows(3)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Model, DeterministicInitialization) {
  Model a(tiny_model_config(5)), b(tiny_model_config(5)), c(tiny_model_config(6));
  ASSERT_EQ(a.params().size(), b.params().size());
  bool differs = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params().at(i).value, b.params().at(i).value);
    differs = differs || a.params().at(i).value != c.params().at(i).value;
  }
  EXPECT_TRUE(differs);
}

TEST(Model, HeadsAreDisjoint) {
  Model m(tiny_model_config());
  const auto cls = m.classifier_params();
  for (std::size_t p : m.policy_params()) EXPECT_EQ(std::find(cls.begin(), cls.end(), p), cls.end());
  EXPECT_EQ(m.params().at(m.policy_params()[2]).value.cols(), 2);
}

TEST(Model, GradientsReachEveryParameter) {
  for (int objective = 0; objective < 2; ++objective) {
    Model m(tiny_model_config(11));
    Rng rng(12);
    for (int i = 0; i < 8; ++i) {
      MultimodalSequence s = random_sequence(rng, 5, 0.5);
      s.elements[0] = random_image(rng);
      Graph g;
      const StepOutputs out = m.forward(g, s);
      const Var loss = objective == 0 ? cis_loss(s.label, out, CISConfig{0.05, 1.0})
                                      : larm_loss(s.label, out, 0.05, WaitForceMask{});
      g.backward(loss);
    }
    for (Parameter* p : m.params().all()) EXPECT_GT(p->grad.cwiseAbs().maxCoeff(), 0.0) << p->name;
  }
}

TEST(Model, ToyGradientsMatchFiniteDifferences) {
  Model m(tiny_model_config(13));
  Rng rng(14);
  MultimodalSequence s = random_sequence(rng, 4);
  s.elements[1] = random_image(rng);
  const LossClosure loss = [&](Graph& g) {
    return larm_loss(s.label, m.forward(g, s), 0.1, WaitForceMask{false, true, false, false});
  };
  GradCheckOptions opts;
  opts.samples = 250;
  opts.seed = 15;
  EXPECT_LT(grad_check(loss, m.params().all(), opts).max_relative_error, 1e-3);
}

}  // namespace
}  // namespace mmec
