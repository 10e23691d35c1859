#include "mmec/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace mmec {

namespace {

constexpr int kPad = 0;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("generator config: " + what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

int spatial_extent(const GeneratorConfig& cfg) {
  const int side = cfg.grid_size / cfg.patch_size;
  return side * side;
}

Grid noisy_copy(const Grid& proto, double noise, Rng& rng) {
  Grid g = proto;
  std::normal_distribution<double> n(0.0, 1.0);
  if (noise > 0.0) {
    for (double& p : g.pixels) p += noise * n(rng);
  }
  return g;
}

Grid random_grid(int size, Rng& rng) {
  Grid g{size, size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  for (double& p : g.pixels) p = uniform01(rng);
  return g;
}

/// k distinct values from [lo, lo + count).
std::vector<int> sample_distinct(int lo, int count, int k, Rng& rng) {
  std::vector<int> pool(count);
  std::iota(pool.begin(), pool.end(), lo);
  for (int i = 0; i < k; ++i) {
    const int j = uniform_int(rng, i, count - 1);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

void GeneratorConfig::validate() const {
  require(samples >= 0, "samples must be >= 0");
  require(is_probability(class_balance), "class_balance must lie in [0,1]");
  require(noise >= 0.0, "noise must be >= 0");
  require(grid_size >= 1 && patch_size >= 1 && grid_size % patch_size == 0,
          "grid_size must be a positive multiple of patch_size");
  require(concept_count >= 2, "concept_count must be >= 2");
  require(generic_vocab >= 0 && concept_vocab >= 1, "vocabulary sizes must be positive");
  require(max_generic_words >= 0 && max_generic_words <= generic_vocab,
          "max_generic_words must lie in [0, generic_vocab]");
  require(max_specific_words >= 1 && max_specific_words <= concept_vocab,
          "max_specific_words must lie in [1, concept_vocab]");
  require(max_generic_words + max_specific_words <= word_slots,
          "word_slots must hold max_generic_words + max_specific_words");
  for (double p : missing_probability) require(is_probability(p), "missing probabilities must lie in [0,1]");
  require(is_probability(reveal_probability), "reveal_probability must lie in [0,1]");
  require(insertion_gap >= 1, "insertion_gap must be >= 1");
  require(feature_cardinality >= 1, "feature_cardinality must be >= 1");
  require(text_vocab >= 4 && text_tokens >= 1, "text_vocab >= 4 and text_tokens >= 1 required");
  for (const auto& order : base_orders) {
    std::array<int, 4> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    require(sorted == std::array<int, 4>{0, 1, 2, 3}, "base_orders entries must be permutations of 0..3");
  }
}

std::vector<Grid> paired_prototypes(const GeneratorConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, {1}));
  std::vector<Grid> protos;
  for (int c = 0; c < cfg.concept_count; ++c) protos.push_back(random_grid(cfg.grid_size, rng));
  return protos;
}

int paired_token_concept(const GeneratorConfig& cfg, int token) {
  const int first = 1 + cfg.generic_vocab;
  if (token < first) return -1;
  return (token - first) / cfg.concept_vocab;
}

std::vector<MultimodalSequence> generate_paired_dataset(const GeneratorConfig& cfg) {
  if (cfg.concept_count < 2) throw std::invalid_argument("concept_count must be >= 2");
  cfg.validate();
  const std::vector<Grid> protos = paired_prototypes(cfg);
  const int d_s = spatial_extent(cfg);
  Rng rng(derive_seed(cfg.seed, {2}));

  struct Draft {
    Grid image;
    std::vector<int> generic;
    std::vector<int> specific;
    int label;
  };
  std::vector<Draft> drafts;
  drafts.reserve(cfg.samples);
  std::map<int, long> frequency;

  for (int i = 0; i < cfg.samples; ++i) {
    Draft d;
    const int concept_id = uniform_int(rng, 0, cfg.concept_count - 1);
    const bool matched = bernoulli(rng, cfg.class_balance);
    int word_concept = concept_id;
    if (!matched) {
      word_concept = uniform_int(rng, 0, cfg.concept_count - 2);
      if (word_concept >= concept_id) ++word_concept;
    }
    d.label = matched ? 0 : 1;
    d.image = noisy_copy(protos[concept_id], cfg.noise, rng);
    const int n_generic = uniform_int(rng, 0, cfg.max_generic_words);
    const int n_specific = uniform_int(rng, 1, cfg.max_specific_words);
    d.generic = sample_distinct(1, cfg.generic_vocab, n_generic, rng);
    d.specific = sample_distinct(1 + cfg.generic_vocab + word_concept * cfg.concept_vocab,
                                 cfg.concept_vocab, n_specific, rng);
    for (int t : d.generic) ++frequency[t];
    for (int t : d.specific) ++frequency[t];
    drafts.push_back(std::move(d));
  }

  // Increasing uniqueness: within each group, more frequent words come first.
  auto by_commonness = [&](int a, int b) {
    if (frequency[a] != frequency[b]) return frequency[a] > frequency[b];
    return a < b;
  };

  std::vector<MultimodalSequence> out;
  out.reserve(drafts.size());
  for (Draft& d : drafts) {
    std::sort(d.generic.begin(), d.generic.end(), by_commonness);
    std::sort(d.specific.begin(), d.specific.end(), by_commonness);
    MultimodalSequence seq;
    seq.label = one_hot(d.label, 2);
    seq.elements.push_back({std::move(d.image), "image", d_s});
    for (int t : d.generic) seq.elements.push_back({TokenIds{{t}}, "text", 1});
    for (int t : d.specific) seq.elements.push_back({TokenIds{{t}}, "text", 1});
    while (static_cast<int>(seq.elements.size()) < 1 + cfg.word_slots) {
      seq.elements.push_back({TokenIds{{kPad}}, "text", 1});
    }
    out.push_back(std::move(seq));
  }
  return out;
}

StructuredArrivals make_arrivals(const Categorical& truth, const GeneratorConfig& cfg, Rng& rng) {
  if (cfg.feature_tiers.empty()) throw std::invalid_argument("missing tier assignment");
  if (truth.values.size() != cfg.feature_tiers.size()) {
    throw std::invalid_argument("missing tier assignment: feature count differs from tier count");
  }
  StructuredArrivals a;
  a.arrivals[0] = truth;
  for (std::size_t f = 0; f < truth.values.size(); ++f) {
    const double p = cfg.missing_probability[static_cast<int>(cfg.feature_tiers[f])];
    if (bernoulli(rng, p)) a.arrivals[0].values[f] = Categorical::kMissing;
  }
  for (int k = 1; k < 3; ++k) {
    a.arrivals[k] = a.arrivals[k - 1];
    for (std::size_t f = 0; f < truth.values.size(); ++f) {
      if (a.arrivals[k].values[f] != Categorical::kMissing) continue;
      if (bernoulli(rng, cfg.reveal_probability)) a.arrivals[k].values[f] = truth.values[f];
    }
  }
  return a;
}

std::vector<int> arrival_layout(int base_length, int structured_slot, int gap) {
  if (structured_slot < 0 || structured_slot >= base_length) {
    throw std::out_of_range("arrival_layout: structured slot out of range");
  }
  std::vector<int> layout(base_length);
  std::iota(layout.begin(), layout.end(), 0);
  layout[structured_slot] = base_length;
  int prev = structured_slot;
  for (int k = 1; k < 3; ++k) {
    int at = prev + gap;
    if (at > static_cast<int>(layout.size())) at = prev + 1;
    layout.insert(layout.begin() + at, base_length + k);
    prev = at;
  }
  return layout;
}

std::vector<MultimodalSequence> generate_structured_arrival_dataset(const GeneratorConfig& cfg) {
  if (cfg.feature_tiers.empty()) throw std::invalid_argument("missing tier assignment");
  cfg.validate();
  if (cfg.base_orders.empty()) throw std::invalid_argument("generator config: base_orders is empty");
  const int n_features = static_cast<int>(cfg.feature_tiers.size());
  const int d_s = spatial_extent(cfg);

  // Class-conditional structure.
  Rng proto_rng(derive_seed(cfg.seed, {11}));
  std::array<std::vector<int>, 2> feature_pattern;
  for (auto& pattern : feature_pattern) {
    for (int f = 0; f < n_features; ++f) pattern.push_back(uniform_int(proto_rng, 0, cfg.feature_cardinality - 1));
  }
  std::array<std::array<Grid, 2>, 2> bag_protos;
  for (auto& per_bag : bag_protos) {
    for (Grid& g : per_bag) g = random_grid(cfg.grid_size, proto_rng);
  }
  const int class_block = cfg.text_vocab / 4;
  const int generic_first = 1 + 2 * class_block;
  const int generic_count = cfg.text_vocab - 2 * class_block;

  static constexpr std::array<double, 3> kPatternStrength = {0.0, 0.55, 0.8};
  static constexpr std::array<const char*, 4> kTags = {"structured", "text", "images_a", "images_b"};

  Rng rng(derive_seed(cfg.seed, {12}));
  std::vector<MultimodalSequence> out;
  out.reserve(cfg.samples);
  for (int i = 0; i < cfg.samples; ++i) {
    const int label = bernoulli(rng, cfg.class_balance) ? 0 : 1;

    Categorical truth;
    for (int f = 0; f < n_features; ++f) {
      const double strength = kPatternStrength[static_cast<int>(cfg.feature_tiers[f])];
      truth.values.push_back(bernoulli(rng, strength) ? feature_pattern[label][f]
                                                      : uniform_int(rng, 0, cfg.feature_cardinality - 1));
    }
    TokenIds text;
    for (int k = 0; k < cfg.text_tokens; ++k) {
      if (bernoulli(rng, 0.4)) text.ids.push_back(1 + label * class_block + uniform_int(rng, 0, class_block - 1));
      else text.ids.push_back(generic_first + uniform_int(rng, 0, generic_count - 1));
    }
    std::array<Element, 4> base = {
        Element{truth, kTags[0], 1},
        Element{std::move(text), kTags[1], 1},
        Element{noisy_copy(bag_protos[0][label], 2.0 * cfg.noise, rng), kTags[2], d_s},
        Element{noisy_copy(bag_protos[1][label], 2.0 * cfg.noise, rng), kTags[3], d_s},
    };
    const StructuredArrivals arrivals = make_arrivals(truth, cfg, rng);

    const auto& order = cfg.base_orders[uniform_int(rng, 0, static_cast<int>(cfg.base_orders.size()) - 1)];
    const int slot = static_cast<int>(std::find(order.begin(), order.end(), 0) - order.begin());
    MultimodalSequence seq;
    seq.label = one_hot(label, 2);
    for (int code : arrival_layout(4, slot, cfg.insertion_gap)) {
      if (code >= 4) seq.elements.push_back({arrivals.arrivals[code - 4], kTags[0], 1});
      else seq.elements.push_back(base[order[code]]);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

Split split(const std::vector<MultimodalSequence>& data, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("holdout fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, {3}));
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    std::swap(idx[i - 1], idx[j]);
  }
  const auto n_val = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(data.size()) + 0.5));
  Split s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < n_val ? s.validation : s.train).push_back(data[idx[i]]);
  }
  return s;
}

}  // namespace mmec
