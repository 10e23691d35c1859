#pragma once

#include "mmec/random.hpp"
#include "mmec/sequence.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mmec {

enum class FeatureTier { kNone = 0, kLow = 1, kHigh = 2 };

/// Parameters for both synthetic tasks. Identical config => identical data.
struct GeneratorConfig {
  std::uint64_t seed = 7;
  int samples = 1000;
  /// Fraction of samples labelled class 0 (paired: correctly matched).
  double class_balance = 0.5;
  double noise = 0.3;
  int grid_size = 8;
  int patch_size = 4;

  // Image/word pairing task. Token 0 is PAD, 1..generic_vocab are generic
  // words, then concept_vocab words per concept.
  int concept_count = 8;
  int generic_vocab = 40;
  int concept_vocab = 6;
  /// Word elements per sequence after padding (T_end = 1 + word_slots).
  int word_slots = 7;
  int max_generic_words = 3;
  int max_specific_words = 3;

  // Structured-arrival task.
  std::vector<FeatureTier> feature_tiers = {
      FeatureTier::kNone, FeatureTier::kNone, FeatureTier::kNone, FeatureTier::kNone,
      FeatureTier::kLow,  FeatureTier::kLow,  FeatureTier::kLow,  FeatureTier::kLow,
      FeatureTier::kHigh, FeatureTier::kHigh, FeatureTier::kHigh, FeatureTier::kHigh};
  int feature_cardinality = 4;
  /// Probability a feature is MISSING in arrival 1, indexed by FeatureTier.
  std::array<double, 3> missing_probability = {0.90, 0.95, 0.99};
  double reveal_probability = 0.20;
  int insertion_gap = 2;
  int text_vocab = 24;
  int text_tokens = 4;
  /// Base element orders over (structured=0, text=1, images_a=2, images_b=3),
  /// drawn uniformly per sample.
  std::vector<std::array<int, 4>> base_orders = {
      {0, 1, 2, 3}, {1, 0, 2, 3}, {0, 2, 1, 3}, {2, 0, 3, 1}};

  /// Throws std::invalid_argument on out-of-range probabilities or sizes.
  void validate() const;
};

/// Class 0 = correctly paired, class 1 = mismatched.
std::vector<MultimodalSequence> generate_paired_dataset(const GeneratorConfig& cfg);

/// Concept prototype grids used by generate_paired_dataset for this config.
std::vector<Grid> paired_prototypes(const GeneratorConfig& cfg);

/// Token id -> concept index, or -1 for PAD/generic tokens.
int paired_token_concept(const GeneratorConfig& cfg, int token);

std::vector<MultimodalSequence> generate_structured_arrival_dataset(const GeneratorConfig& cfg);

/// Arrival procedure applied to one structured record.
struct StructuredArrivals {
  std::array<Categorical, 3> arrivals;
};
StructuredArrivals make_arrivals(const Categorical& truth, const GeneratorConfig& cfg, Rng& rng);

/// Positions of the base elements after replacing `structured_slot` with three
/// arrivals. Returns the new ordering as indices: base element indices 0..n-1
/// stay as they are, arrivals are encoded as n, n+1, n+2.
std::vector<int> arrival_layout(int base_length, int structured_slot, int gap);

struct Split {
  std::vector<MultimodalSequence> train;
  std::vector<MultimodalSequence> validation;
};

/// Seeded shuffle split; validation size is round-half-up(fraction * n).
Split split(const std::vector<MultimodalSequence>& data, double holdout_fraction, std::uint64_t seed);

}  // namespace mmec
