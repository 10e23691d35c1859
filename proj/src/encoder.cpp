#include "mmec/encoder.hpp"

#include "mmec/ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace mmec {

const char* to_string(ExtractorKind k) {
  switch (k) {
    case ExtractorKind::kTokenEmbedding: return "token-embedding";
    case ExtractorKind::kPatchGrid: return "patch-grid";
    case ExtractorKind::kCategoricalOneHot: return "categorical-onehot";
    case ExtractorKind::kPassthrough: return "passthrough";
  }
  return "?";
}

ExtractorKind extractor_from_string(const std::string& s) {
  for (auto k : {ExtractorKind::kTokenEmbedding, ExtractorKind::kPatchGrid, ExtractorKind::kCategoricalOneHot,
                 ExtractorKind::kPassthrough}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown extractor kind: " + s);
}

int PeripheralSpec::spatial_extent() const {
  if (kind != ExtractorKind::kPatchGrid) return 1;
  return (grid_h / patch) * (grid_w / patch);
}

int PeripheralSpec::feature_dim() const {
  switch (kind) {
    case ExtractorKind::kTokenEmbedding: return embedding_dim;
    case ExtractorKind::kPatchGrid: return patch * patch;
    case ExtractorKind::kCategoricalOneHot: {
      int n = 0;
      for (int c : cardinalities) n += c + 1;
      return n;
    }
    case ExtractorKind::kPassthrough: return input_dim;
  }
  return 0;
}

void PeripheralSpec::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("peripheral '" + modality + "': " + what);
  };
  switch (kind) {
    case ExtractorKind::kTokenEmbedding:
      if (vocab_size < 1 || embedding_dim < 1) fail("vocab_size and embedding_dim must be positive");
      break;
    case ExtractorKind::kPatchGrid:
      if (patch < 1 || grid_h < patch || grid_w < patch || grid_h % patch || grid_w % patch) {
        fail("grid must tile exactly into patches");
      }
      break;
    case ExtractorKind::kCategoricalOneHot:
      if (cardinalities.empty()) fail("no categorical features");
      for (int c : cardinalities) {
        if (c < 1) fail("cardinalities must be positive");
      }
      break;
    case ExtractorKind::kPassthrough:
      if (input_dim < 1) fail("input_dim must be positive");
      break;
  }
}

Matrix extract_features(const Element& e, const PeripheralSpec& spec) {
  if (e.modality != spec.modality) {
    throw std::invalid_argument("modality mismatch: element '" + e.modality + "' given to peripheral '" +
                                spec.modality + "'");
  }
  switch (spec.kind) {
    case ExtractorKind::kTokenEmbedding:
      throw std::logic_error("token embeddings are looked up, not extracted");
    case ExtractorKind::kPatchGrid: {
      const auto* g = std::get_if<Grid>(&e.payload);
      if (!g) throw std::invalid_argument("patch-grid peripheral needs a grid payload");
      spec.validate();
      if (g->h != spec.grid_h || g->w != spec.grid_w) throw std::invalid_argument("grid size mismatch");
      const int p = spec.patch;
      const int pw = g->w / p;
      Matrix out(spec.spatial_extent(), p * p);
      for (int row = 0; row < out.rows(); ++row) {
        const int py = row / pw, px = row % pw;
        for (int y = 0; y < p; ++y) {
          for (int x = 0; x < p; ++x) {
            out(row, y * p + x) = g->pixels[static_cast<std::size_t>((py * p + y) * g->w + px * p + x)];
          }
        }
      }
      return out;
    }
    case ExtractorKind::kCategoricalOneHot: {
      const auto* c = std::get_if<Categorical>(&e.payload);
      if (!c) throw std::invalid_argument("categorical peripheral needs a categorical payload");
      if (c->values.size() != spec.cardinalities.size()) throw std::invalid_argument("feature count mismatch");
      Matrix out = Matrix::Zero(1, spec.feature_dim());
      int offset = 0;
      for (std::size_t f = 0; f < c->values.size(); ++f) {
        const int card = spec.cardinalities[f];
        const int v = c->values[f];
        if (v == Categorical::kMissing) out(0, offset + card) = 1.0;
        else if (v >= 0 && v < card) out(0, offset + v) = 1.0;
        else throw std::out_of_range("categorical value " + std::to_string(v) + " outside feature domain");
        offset += card + 1;
      }
      return out;
    }
    case ExtractorKind::kPassthrough: {
      const auto* d = std::get_if<Dense>(&e.payload);
      if (!d) throw std::invalid_argument("passthrough peripheral needs a dense payload");
      if (static_cast<int>(d->values.size()) != spec.input_dim) throw std::invalid_argument("dense width mismatch");
      return Eigen::Map<const Matrix>(d->values.data(), 1, spec.input_dim);
    }
  }
  throw std::logic_error("unhandled extractor");
}

Var apply_peripheral(Binder& bind, const Element& e, const Peripheral& p) {
  const PeripheralSpec& spec = p.spec;
  if (e.modality != spec.modality) {
    throw std::invalid_argument("modality mismatch: element '" + e.modality + "' given to peripheral '" +
                                spec.modality + "'");
  }
  if (e.d_s != spec.spatial_extent()) {
    throw std::invalid_argument("element d_s " + std::to_string(e.d_s) + " does not match peripheral '" +
                                spec.modality + "' (" + std::to_string(spec.spatial_extent()) + ")");
  }
  Var features;
  if (spec.kind == ExtractorKind::kTokenEmbedding) {
    const auto* t = std::get_if<TokenIds>(&e.payload);
    if (!t) throw std::invalid_argument("token-embedding peripheral needs a token payload");
    if (t->ids.empty()) throw std::invalid_argument("empty token list");
    for (int id : t->ids) {
      if (id < 0 || id >= spec.vocab_size) {
        throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " +
                                std::to_string(spec.vocab_size));
      }
    }
    features = mean_rows(gather_rows(bind(p.table), t->ids));
  } else {
    features = bind.graph().constant(extract_features(e, spec));
  }
  return add_row(matmul(features, bind(p.weight)), bind(p.bias));
}

Encoder::Encoder(std::vector<PeripheralSpec> specs, int d_model, ParameterStore& store, Rng& rng)
    : d_model_(d_model) {
  if (d_model < 1) throw std::invalid_argument("d_model must be positive");
  for (PeripheralSpec& s : specs) {
    s.validate();
    for (const Peripheral& existing : peripherals_) {
      if (existing.spec.modality == s.modality) {
        throw std::invalid_argument("duplicate peripheral for modality '" + s.modality + "'");
      }
    }
    Peripheral p;
    const std::string prefix = "peripheral." + s.modality + ".";
    if (s.kind == ExtractorKind::kTokenEmbedding) {
      p.table = store.add(prefix + "embedding", xavier(s.vocab_size, s.embedding_dim, rng));
    }
    p.weight = store.add(prefix + "weight", xavier(s.feature_dim(), d_model, rng));
    p.bias = store.add(prefix + "bias", Matrix::Zero(1, d_model));
    p.spec = std::move(s);
    peripherals_.push_back(std::move(p));
  }
}

const Peripheral& Encoder::peripheral(const std::string& modality) const {
  for (const Peripheral& p : peripherals_) {
    if (p.spec.modality == modality) return p;
  }
  throw std::invalid_argument("no peripheral registered for modality '" + modality + "'");
}

CacheSet extend_caches(Binder& bind, const CacheSet& cache, const Element& next, const Encoder& encoder) {
  const Var out = apply_peripheral(bind, next, encoder.peripheral(next.modality));
  const std::size_t t = cache.length();
  CacheSet result = cache;
  if (out.rows() > 1) {
    result.spatial = cache.spatial.valid() ? concat_rows({cache.spatial, out}) : out;
    result.origin_map.insert(result.origin_map.end(), static_cast<std::size_t>(out.rows()), t);
  }
  const Var row = out.rows() > 1 ? mean_rows(out) : out;
  result.temporal = cache.temporal.valid() ? concat_rows({cache.temporal, row}) : row;
  return result;
}

CacheSet build_caches(Binder& bind, std::span<const Element> state, const Encoder& encoder) {
  if (state.empty()) throw std::invalid_argument("build_caches: empty state");
  std::vector<Var> temporal_rows;
  std::vector<Var> spatial_blocks;
  CacheSet cache;
  for (std::size_t t = 0; t < state.size(); ++t) {
    const Var out = apply_peripheral(bind, state[t], encoder.peripheral(state[t].modality));
    if (out.rows() > 1) {
      spatial_blocks.push_back(out);
      cache.origin_map.insert(cache.origin_map.end(), static_cast<std::size_t>(out.rows()), t);
      temporal_rows.push_back(mean_rows(out));
    } else {
      temporal_rows.push_back(out);
    }
  }
  cache.temporal = temporal_rows.size() == 1 ? temporal_rows.front() : concat_rows(temporal_rows);
  if (!spatial_blocks.empty()) {
    cache.spatial = spatial_blocks.size() == 1 ? spatial_blocks.front() : concat_rows(spatial_blocks);
  }
  return cache;
}

std::vector<PeripheralSpec> infer_peripherals(const std::vector<MultimodalSequence>& data, int embedding_dim) {
  std::map<std::string, PeripheralSpec> specs;
  for (const MultimodalSequence& seq : data) {
    for (const Element& e : seq.elements) {
      auto [it, fresh] = specs.try_emplace(e.modality);
      PeripheralSpec& s = it->second;
      if (fresh) s.modality = e.modality;
      std::visit(
          [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TokenIds>) {
              s.kind = ExtractorKind::kTokenEmbedding;
              s.embedding_dim = embedding_dim;
              for (int id : p.ids) s.vocab_size = std::max(s.vocab_size, id + 1);
            } else if constexpr (std::is_same_v<T, Grid>) {
              s.kind = ExtractorKind::kPatchGrid;
              s.grid_h = p.h;
              s.grid_w = p.w;
              s.patch = static_cast<int>(std::lround(std::sqrt(static_cast<double>(p.h) * p.w / e.d_s)));
            } else if constexpr (std::is_same_v<T, Categorical>) {
              s.kind = ExtractorKind::kCategoricalOneHot;
              s.cardinalities.resize(std::max(s.cardinalities.size(), p.values.size()), 1);
              for (std::size_t f = 0; f < p.values.size(); ++f) {
                s.cardinalities[f] = std::max(s.cardinalities[f], p.values[f] + 1);
              }
            } else {
              s.kind = ExtractorKind::kPassthrough;
              s.input_dim = static_cast<int>(p.values.size());
            }
          },
          e.payload);
    }
  }
  std::vector<PeripheralSpec> out;
  for (auto& [tag, s] : specs) out.push_back(std::move(s));
  return out;
}

}  // namespace mmec
