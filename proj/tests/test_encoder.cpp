#include "mmec/encoder.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace mmec {
namespace {

using testing::random_image;
using testing::random_sequence;
using testing::random_text;
using testing::tiny_peripherals;

PeripheralSpec grid_spec(int side, int patch) {
  PeripheralSpec s;
  s.modality = "image";
  s.kind = ExtractorKind::kPatchGrid;
  s.grid_h = s.grid_w = side;
  s.patch = patch;
  return s;
}

Element grid_element(int side, int d_s, double fill = 0.5) {
  return {Grid{side, side, std::vector<double>(static_cast<std::size_t>(side * side), fill)}, "image", d_s};
}

struct Fixture {
  explicit Fixture(std::vector<PeripheralSpec> specs, int d_model = 8, std::uint64_t seed = 3) {
    Rng rng(seed);
    encoder = Encoder(std::move(specs), d_model, store, rng);
  }
  ParameterStore store;
  Encoder encoder;
};

TEST(Peripheral, EightByEightPatchFourGivesFourRows) {
  Fixture f({grid_spec(8, 4)});
  Graph g;
  Binder bind(g, f.store);
  const Var out = apply_peripheral(bind, grid_element(8, 4), f.encoder.peripheral("image"));
  EXPECT_EQ(out.rows(), 4);
  EXPECT_EQ(out.cols(), 8);
  EXPECT_EQ(grid_spec(8, 4).spatial_extent(), 4);
}

TEST(Peripheral, TextIsSingleRow) {
  Fixture f(tiny_peripherals());
  Graph g;
  Binder bind(g, f.store);
  Rng rng(1);
  const Var out = apply_peripheral(bind, random_text(rng), f.encoder.peripheral("text"));
  EXPECT_EQ(out.rows(), 1);
  EXPECT_EQ(out.cols(), 8);
}

TEST(Peripheral, ZeroAffineGivesZeroFeatures) {
  Fixture f(tiny_peripherals());
  for (Parameter* p : f.store.all()) {
    if (p->name.find("weight") != std::string::npos || p->name.find("bias") != std::string::npos) {
      p->value.setZero();
    }
  }
  Graph g;
  Binder bind(g, f.store);
  Rng rng(2);
  const Var img = apply_peripheral(bind, random_image(rng), f.encoder.peripheral("image"));
  const Var txt = apply_peripheral(bind, random_text(rng), f.encoder.peripheral("text"));
  EXPECT_EQ(img.value(), Matrix::Zero(4, 8));
  EXPECT_EQ(txt.value(), Matrix::Zero(1, 8));
}

TEST(Peripheral, PatchFeaturesAreRowMajorTiles) {
  Grid g{4, 4, {}};
  for (int i = 0; i < 16; ++i) g.pixels.push_back(i);
  const Matrix feats = extract_features({g, "image", 4}, grid_spec(4, 2));
  Matrix expected(4, 4);
  expected << 0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13, 10, 11, 14, 15;
  EXPECT_EQ(feats, expected);
}

TEST(Peripheral, CategoricalOneHotHasMissingSlot) {
  PeripheralSpec s;
  s.modality = "structured";
  s.kind = ExtractorKind::kCategoricalOneHot;
  s.cardinalities = {2, 3};
  EXPECT_EQ(s.feature_dim(), 7);
  const Matrix feats = extract_features({Categorical{{Categorical::kMissing, 1}}, "structured", 1}, s);
  Matrix expected(1, 7);
  expected << 0, 0, 1, 0, 1, 0, 0;
  EXPECT_EQ(feats, expected);
}

TEST(Peripheral, PassthroughCopiesVector) {
  PeripheralSpec s;
  s.modality = "embedding";
  s.kind = ExtractorKind::kPassthrough;
  s.input_dim = 3;
  EXPECT_EQ(extract_features({Dense{{1.5, -2, 0}}, "embedding", 1}, s), (Matrix(1, 3) << 1.5, -2, 0).finished());
  EXPECT_THROW(extract_features({Dense{{1.5}}, "embedding", 1}, s), std::invalid_argument);
}

TEST(Peripheral, Errors) {
  Fixture f(tiny_peripherals());
  Graph g;
  Binder bind(g, f.store);
  Rng rng(4);
  EXPECT_THROW(apply_peripheral(bind, random_text(rng), f.encoder.peripheral("image")), std::invalid_argument);
  EXPECT_THROW(apply_peripheral(bind, {TokenIds{{testing::kTinyVocab}}, "text", 1}, f.encoder.peripheral("text")),
               std::out_of_range);
  EXPECT_THROW(f.encoder.peripheral("audio"), std::invalid_argument);
  EXPECT_ANY_THROW(extract_features(grid_element(4, 4), grid_spec(4, 3)));
}

TEST(ExtractorKind, StringRoundTrip) {
  for (ExtractorKind k : {ExtractorKind::kTokenEmbedding, ExtractorKind::kPatchGrid,
                          ExtractorKind::kCategoricalOneHot, ExtractorKind::kPassthrough}) {
    EXPECT_EQ(extractor_from_string(to_string(k)), k);
  }
  EXPECT_THROW(extractor_from_string("resnet"), std::invalid_argument);
}

TEST(Caches, ImageTextImageOriginMap) {
  Fixture f({grid_spec(8, 2), tiny_peripherals()[1]});
  Rng rng(5);
  const std::vector<Element> state = {grid_element(8, 16, 0.1), random_text(rng), grid_element(8, 16, 0.9)};
  Graph g;
  Binder bind(g, f.store);
  const CacheSet c = build_caches(bind, state, f.encoder);
  EXPECT_EQ(c.temporal.rows(), 3);
  EXPECT_EQ(c.spatial.rows(), 32);
  std::vector<std::size_t> expected(16, 0);
  expected.insert(expected.end(), 16, 2);
  EXPECT_EQ(c.origin_map, expected);
}

TEST(Caches, AllTextHasNoSpatialCache) {
  Fixture f(tiny_peripherals());
  Rng rng(6);
  const std::vector<Element> state = {random_text(rng), random_text(rng), random_text(rng)};
  Graph g;
  Binder bind(g, f.store);
  const CacheSet c = build_caches(bind, state, f.encoder);
  EXPECT_EQ(c.length(), 3u);
  EXPECT_FALSE(c.spatial.valid());
  EXPECT_TRUE(c.origin_map.empty());
}

TEST(Caches, TemporalRowIsMeanOfSpatialRows) {
  Fixture f({grid_spec(8, 2)});
  Grid img{8, 8, {}};
  Rng rng(7);
  for (int i = 0; i < 64; ++i) img.pixels.push_back(uniform01(rng));
  const std::vector<Element> state = {{img, "image", 16}};
  Graph g;
  Binder bind(g, f.store);
  const CacheSet c = build_caches(bind, state, f.encoder);
  ASSERT_EQ(c.spatial.rows(), 16);
  const Matrix mean = c.spatial.value().colwise().mean();
  EXPECT_LT((c.temporal.value() - mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Caches, TextTemporalRowIsPeripheralOutput) {
  Fixture f(tiny_peripherals());
  Rng rng(8);
  const Element txt = random_text(rng);
  Graph g;
  Binder bind(g, f.store);
  const std::vector<Element> state = {random_image(rng), txt};
  const CacheSet c = build_caches(bind, state, f.encoder);
  const Var direct = apply_peripheral(bind, txt, f.encoder.peripheral("text"));
  EXPECT_EQ(Matrix(c.temporal.value().row(1)), direct.value());
}

TEST(Caches, ExtendFromEmptyEqualsBuild) {
  Fixture f(tiny_peripherals());
  Rng rng(9);
  const Element txt = random_text(rng);
  Graph g;
  Binder bind(g, f.store);
  const CacheSet ext = extend_caches(bind, CacheSet{}, txt, f.encoder);
  const CacheSet built = build_caches(bind, std::span<const Element>(&txt, 1), f.encoder);
  EXPECT_EQ(ext.temporal.value(), built.temporal.value());
  EXPECT_FALSE(ext.spatial.valid());
}

TEST(Caches, ExtendFoldMatchesBuildOnRandomSequences) {
  Fixture f(tiny_peripherals());
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const MultimodalSequence seq = random_sequence(rng, 6);
    Graph g;
    Binder bind(g, f.store);
    CacheSet inc;
    for (std::size_t t = 0; t < seq.t_end(); ++t) {
      const std::size_t before = inc.spatial_rows();
      inc = extend_caches(bind, inc, seq.elements[t], f.encoder);
      EXPECT_EQ(inc.spatial_rows() - before, static_cast<std::size_t>(seq.elements[t].d_s > 1 ? 4 : 0));
    }
    const CacheSet batch = build_caches(bind, seq.elements, f.encoder);
    ASSERT_EQ(inc.origin_map, batch.origin_map);
    EXPECT_EQ(inc.temporal.value(), batch.temporal.value());
    ASSERT_EQ(inc.spatial.valid(), batch.spatial.valid());
    if (batch.spatial.valid()) EXPECT_EQ(inc.spatial.value(), batch.spatial.value());
  }
}

TEST(Caches, OriginMapBlocksAreContiguousAndSized) {
  Fixture f(tiny_peripherals());
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const MultimodalSequence seq = random_sequence(rng, 8, 0.5);
    Graph g;
    Binder bind(g, f.store);
    const CacheSet c = build_caches(bind, seq.elements, f.encoder);
    std::vector<std::size_t> expected;
    for (std::size_t t = 0; t < seq.t_end(); ++t) {
      if (seq.elements[t].d_s > 1) expected.insert(expected.end(), 4, t);
    }
    EXPECT_EQ(c.origin_map, expected);
    EXPECT_TRUE(std::is_sorted(c.origin_map.begin(), c.origin_map.end()));
  }
}

TEST(InferPeripherals, SizesFromPayloads) {
  std::vector<MultimodalSequence> data = {
      {{{Grid{8, 8, std::vector<double>(64)}, "image", 4}, {TokenIds{{3, 12}}, "text", 1}}, one_hot(0, 2)},
      {{{Categorical{{2, Categorical::kMissing}}, "structured", 1}, {Categorical{{0, 4}}, "structured", 1}},
       one_hot(1, 2)},
  };
  const auto specs = infer_peripherals(data, 6);
  ASSERT_EQ(specs.size(), 3u);
  for (const auto& s : specs) {
    if (s.modality == "image") {
      EXPECT_EQ(s.patch, 4);
      EXPECT_EQ(s.spatial_extent(), 4);
    } else if (s.modality == "text") {
      EXPECT_EQ(s.vocab_size, 13);
      EXPECT_EQ(s.embedding_dim, 6);
    } else {
      EXPECT_EQ(s.cardinalities, (std::vector<int>{3, 5}));
    }
  }
}

}  // namespace
}  // namespace mmec
