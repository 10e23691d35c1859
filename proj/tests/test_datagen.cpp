#include "mmec/datagen.hpp"
#include "mmec/jsonl.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

namespace mmec {
namespace {

int nearest_prototype(const Grid& g, const std::vector<Grid>& protos) {
  int best = -1;
  double best_d = 0.0;
  for (std::size_t c = 0; c < protos.size(); ++c) {
    double d = 0.0;
    for (std::size_t i = 0; i < g.pixels.size(); ++i) {
      const double diff = g.pixels[i] - protos[c].pixels[i];
      d += diff * diff;
    }
    if (best < 0 || d < best_d) {
      best = static_cast<int>(c);
      best_d = d;
    }
  }
  return best;
}

int count_missing(const Categorical& c) {
  return static_cast<int>(std::count(c.values.begin(), c.values.end(), Categorical::kMissing));
}

std::vector<const Categorical*> structured_arrivals(const MultimodalSequence& s) {
  std::vector<const Categorical*> out;
  for (const Element& e : s.elements) {
    if (e.modality == "structured") out.push_back(&std::get<Categorical>(e.payload));
  }
  return out;
}

TEST(PairedDataset, ClassesBalanced) {
  GeneratorConfig cfg;
  cfg.samples = 10000;
  const auto data = generate_paired_dataset(cfg);
  ASSERT_EQ(data.size(), 10000u);
  int matched = 0;
  for (const auto& s : data) matched += s.true_class() == 0;
  EXPECT_NEAR(matched / 10000.0, 0.5, 0.02);
}

TEST(PairedDataset, ShapeAndOrdering) {
  GeneratorConfig cfg;
  cfg.samples = 300;
  const auto data = generate_paired_dataset(cfg);
  for (const auto& s : data) {
    validate(s);
    ASSERT_EQ(s.t_end(), static_cast<std::size_t>(1 + cfg.word_slots));
    EXPECT_EQ(s.elements[0].modality, "image");
    EXPECT_EQ(s.elements[0].d_s, 4);
    // generic < specific < PAD in position
    int phase = 0;
    for (std::size_t t = 1; t < s.t_end(); ++t) {
      EXPECT_EQ(s.elements[t].modality, "text");
      const int tok = std::get<TokenIds>(s.elements[t].payload).ids.at(0);
      const int p = tok == 0 ? 2 : (paired_token_concept(cfg, tok) >= 0 ? 1 : 0);
      EXPECT_GE(p, phase);
      phase = p;
    }
    EXPECT_GE(phase, 1);
  }
}

TEST(PairedDataset, MismatchUsesOtherConcept) {
  GeneratorConfig cfg;
  cfg.samples = 500;
  cfg.noise = 0.0;
  const auto protos = paired_prototypes(cfg);
  for (const auto& s : generate_paired_dataset(cfg)) {
    const int image_concept = nearest_prototype(std::get<Grid>(s.elements[0].payload), protos);
    std::set<int> word_concepts;
    for (std::size_t t = 1; t < s.t_end(); ++t) {
      const int c = paired_token_concept(cfg, std::get<TokenIds>(s.elements[t].payload).ids[0]);
      if (c >= 0) word_concepts.insert(c);
    }
    ASSERT_EQ(word_concepts.size(), 1u);
    EXPECT_EQ(*word_concepts.begin() == image_concept, s.true_class() == 0);
  }
}

TEST(PairedDataset, NoiselessScanClassifierIsPerfectAfterFirstSpecificWord) {
  GeneratorConfig cfg;
  cfg.samples = 2000;
  cfg.noise = 0.0;
  cfg.max_generic_words = 0;
  const auto protos = paired_prototypes(cfg);
  int correct = 0;
  for (const auto& s : generate_paired_dataset(cfg)) {
    const int image_concept = nearest_prototype(std::get<Grid>(s.elements[0].payload), protos);
    const int tok = std::get<TokenIds>(s.elements[1].payload).ids[0];
    const int predicted = paired_token_concept(cfg, tok) == image_concept ? 0 : 1;
    correct += predicted == s.true_class();
  }
  EXPECT_EQ(correct, 2000);
}

TEST(PairedDataset, ByteIdenticalRegeneration) {
  GeneratorConfig cfg;
  cfg.samples = 200;
  const auto a = generate_paired_dataset(cfg);
  const auto b = generate_paired_dataset(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json_line(a[i]), to_json_line(b[i]));
  cfg.seed = 8;
  EXPECT_NE(to_json_line(generate_paired_dataset(cfg)[0]), to_json_line(a[0]));
}

TEST(PairedDataset, RejectsSingleConcept) {
  GeneratorConfig cfg;
  cfg.concept_count = 1;
  EXPECT_THROW(generate_paired_dataset(cfg), std::invalid_argument);
}

TEST(ArrivalLayout, MostCommonSequence) {
  // structured, text, imagesA, imagesB -> S1, text, S2, imagesA, S3, imagesB
  EXPECT_EQ(arrival_layout(4, 0, 2), (std::vector<int>{4, 1, 5, 2, 6, 3}));
}

TEST(ArrivalLayout, FallsBackToImmediatelyAfter) {
  EXPECT_EQ(arrival_layout(4, 3, 2), (std::vector<int>{0, 1, 2, 4, 5, 6}));
  EXPECT_EQ(arrival_layout(4, 2, 2), (std::vector<int>{0, 1, 4, 3, 5, 6}));
}

TEST(StructuredDataset, MostCommonOrderProducesExpectedSequence) {
  GeneratorConfig cfg;
  cfg.samples = 5;
  cfg.base_orders = {{0, 1, 2, 3}};
  for (const auto& s : generate_structured_arrival_dataset(cfg)) {
    EXPECT_EQ(s.signature(), "structured>text>structured>images_a>structured>images_b");
  }
}

TEST(StructuredDataset, FullRevealRestoresTruthByArrivalTwo) {
  GeneratorConfig cfg;
  cfg.samples = 200;
  cfg.reveal_probability = 1.0;
  for (const auto& s : generate_structured_arrival_dataset(cfg)) {
    const auto arr = structured_arrivals(s);
    ASSERT_EQ(arr.size(), 3u);
    EXPECT_EQ(count_missing(*arr[1]), 0);
    EXPECT_EQ(*arr[1], *arr[2]);
  }
}

TEST(StructuredDataset, NoMaskingGivesIdenticalArrivals) {
  GeneratorConfig cfg;
  cfg.samples = 200;
  cfg.missing_probability = {0.0, 0.0, 0.0};
  for (const auto& s : generate_structured_arrival_dataset(cfg)) {
    const auto arr = structured_arrivals(s);
    EXPECT_EQ(count_missing(*arr[0]), 0);
    EXPECT_EQ(*arr[0], *arr[1]);
    EXPECT_EQ(*arr[1], *arr[2]);
  }
}

TEST(StructuredDataset, MissingCountNonIncreasingAndRevealsAreTruthful) {
  GeneratorConfig cfg;
  cfg.samples = 1000;
  cfg.reveal_probability = 0.5;
  for (const auto& s : generate_structured_arrival_dataset(cfg)) {
    validate(s);
    const auto arr = structured_arrivals(s);
    EXPECT_GE(count_missing(*arr[0]), count_missing(*arr[1]));
    EXPECT_GE(count_missing(*arr[1]), count_missing(*arr[2]));
    for (std::size_t f = 0; f < arr[0]->values.size(); ++f) {
      if (arr[0]->values[f] != Categorical::kMissing) {
        EXPECT_EQ(arr[1]->values[f], arr[0]->values[f]);
      }
      if (arr[1]->values[f] != Categorical::kMissing) {
        EXPECT_EQ(arr[2]->values[f], arr[1]->values[f]);
      }
    }
  }
}

TEST(StructuredDataset, TierMissingnessRates) {
  GeneratorConfig cfg;
  cfg.samples = 2500;  // 4 features per tier -> 10,000 per tier
  std::array<long, 3> missing{}, total{};
  for (const auto& s : generate_structured_arrival_dataset(cfg)) {
    const Categorical& a1 = *structured_arrivals(s)[0];
    for (std::size_t f = 0; f < a1.values.size(); ++f) {
      const int tier = static_cast<int>(cfg.feature_tiers[f]);
      ++total[tier];
      missing[tier] += a1.values[f] == Categorical::kMissing;
    }
  }
  for (int t = 0; t < 3; ++t) {
    ASSERT_GE(total[t], 10000);
    EXPECT_NEAR(static_cast<double>(missing[t]) / total[t], cfg.missing_probability[t], 0.01);
  }
}

TEST(StructuredDataset, MissingTiersRejected) {
  GeneratorConfig cfg;
  cfg.feature_tiers.clear();
  EXPECT_THROW(generate_structured_arrival_dataset(cfg), std::invalid_argument);
  Rng rng(1);
  GeneratorConfig three;
  three.feature_tiers = {FeatureTier::kHigh};
  EXPECT_THROW(make_arrivals(Categorical{{0, 1}}, three, rng), std::invalid_argument);
}

TEST(StructuredDataset, Deterministic) {
  GeneratorConfig cfg;
  cfg.samples = 100;
  EXPECT_EQ(generate_structured_arrival_dataset(cfg), generate_structured_arrival_dataset(cfg));
}

TEST(GeneratorConfig, RejectsBadProbabilities) {
  GeneratorConfig cfg;
  cfg.class_balance = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = GeneratorConfig{};
  cfg.missing_probability[1] = -0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = GeneratorConfig{};
  cfg.reveal_probability = 2.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

std::vector<MultimodalSequence> numbered(int n) {
  std::vector<MultimodalSequence> out;
  for (int i = 0; i < n; ++i) out.push_back({{{TokenIds{{i}}, "text", 1}}, one_hot(0, 2)});
  return out;
}

int id_of(const MultimodalSequence& s) { return std::get<TokenIds>(s.elements[0].payload).ids[0]; }

TEST(Split, TenPercentOfHundred) {
  const Split s = split(numbered(100), 0.1, 3);
  EXPECT_EQ(s.train.size(), 90u);
  EXPECT_EQ(s.validation.size(), 10u);
  std::set<int> seen;
  for (const auto& x : s.train) seen.insert(id_of(x));
  for (const auto& x : s.validation) seen.insert(id_of(x));
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Split, HalfOfThreeRoundsUp) {
  const Split s = split(numbered(3), 0.5, 3);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.validation.size(), 2u);
}

TEST(Split, SeedDeterministic) {
  const auto data = numbered(50);
  const Split a = split(data, 0.2, 11), b = split(data, 0.2, 11), c = split(data, 0.2, 12);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_NE(a.validation, c.validation);
}

TEST(Split, FractionOutsideOpenIntervalThrows) {
  for (double f : {0.0, 1.0, -0.2, 1.5}) EXPECT_THROW(split(numbered(4), f, 1), std::invalid_argument);
}

}  // namespace
}  // namespace mmec
