#pragma once

#include "mmec/graph.hpp"
#include "mmec/params.hpp"
#include "mmec/sequence.hpp"

#include <span>
#include <string>
#include <vector>

namespace mmec {

enum class ExtractorKind { kTokenEmbedding, kPatchGrid, kCategoricalOneHot, kPassthrough };

const char* to_string(ExtractorKind k);
ExtractorKind extractor_from_string(const std::string& s);

/// Feature extractor settings for one modality. Every extractor is followed by
/// a single affine projector to d_model.
struct PeripheralSpec {
  std::string modality;
  ExtractorKind kind = ExtractorKind::kTokenEmbedding;
  // token-embedding
  int vocab_size = 0;
  int embedding_dim = 0;
  // patch-grid: non-overlapping patch x patch tiles of an h x w grid
  int grid_h = 0;
  int grid_w = 0;
  int patch = 1;
  // categorical-onehot: one extra slot per feature encodes MISSING
  std::vector<int> cardinalities;
  // passthrough
  int input_dim = 0;

  /// Rows the peripheral emits: (h/patch)*(w/patch) for grids, else 1.
  int spatial_extent() const;
  /// Width of the extracted feature vector fed to the projector.
  int feature_dim() const;
  void validate() const;
};

/// A PeripheralSpec bound to its parameters in a ParameterStore.
struct Peripheral {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  PeripheralSpec spec;
  std::size_t table = kNone;
  std::size_t weight = kNone;
  std::size_t bias = kNone;
};

/// Extracted (pre-projection) features of `e`: (d_s, feature_dim).
/// Throws on modality mismatch, out-of-range ids/values or wrong geometry.
Matrix extract_features(const Element& e, const PeripheralSpec& spec);

/// Peripheral output (d_s, d_model).
Var apply_peripheral(Binder& bind, const Element& e, const Peripheral& p);

class Encoder {
 public:
  Encoder() = default;
  /// Registers parameters for every spec; tags must be unique.
  Encoder(std::vector<PeripheralSpec> specs, int d_model, ParameterStore& store, Rng& rng);

  const Peripheral& peripheral(const std::string& modality) const;
  const std::vector<Peripheral>& peripherals() const { return peripherals_; }
  int d_model() const { return d_model_; }

 private:
  int d_model_ = 0;
  std::vector<Peripheral> peripherals_;
};

/// Temporal and spatial caches for a state prefix. `spatial` is invalid
/// (Var::valid() == false) while no spatial element has been ingested.
struct CacheSet {
  Var temporal;
  Var spatial;
  /// Temporal index of the source element of every spatial row.
  std::vector<std::size_t> origin_map;

  std::size_t length() const { return temporal.valid() ? static_cast<std::size_t>(temporal.rows()) : 0; }
  std::size_t spatial_rows() const { return origin_map.size(); }
};

/// Runs every element through its peripheral. Elements with d_s > 1 append
/// all rows to the spatial cache; every element appends its row-mean to the
/// temporal cache.
CacheSet build_caches(Binder& bind, std::span<const Element> state, const Encoder& encoder);

/// Incremental form: equals build_caches over the state extended by `next`.
CacheSet extend_caches(Binder& bind, const CacheSet& cache, const Element& next, const Encoder& encoder);

/// Specs covering every modality in `data`, with sizes inferred from the
/// payloads (vocab = max id + 1, cardinality = max value + 1, patch size from
/// d_s).
std::vector<PeripheralSpec> infer_peripherals(const std::vector<MultimodalSequence>& data,
                                              int embedding_dim = 16);

}  // namespace mmec
