#pragma once

#include "mmec/graph.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace mmec {

struct TokenIds {
  std::vector<int> ids;
  bool operator==(const TokenIds&) const = default;
};

/// Image proxy: h x w grid of intensities.
struct Grid {
  int h = 0;
  int w = 0;
  std::vector<double> pixels;
  bool operator==(const Grid&) const = default;
};

/// Categorical feature vector; kMissing marks an unobserved feature.
struct Categorical {
  static constexpr int kMissing = -1;
  std::vector<int> values;
  bool operator==(const Categorical&) const = default;
};

/// Externally computed embedding.
struct Dense {
  std::vector<double> values;
  bool operator==(const Dense&) const = default;
};

using Payload = std::variant<TokenIds, Grid, Categorical, Dense>;

enum class PayloadKind { kTokens, kGrid, kCategorical, kDense };

PayloadKind payload_kind(const Payload& p);
const char* to_string(PayloadKind k);

struct Element {
  Payload payload;
  std::string modality;
  /// Spatial extent: number of rows the element contributes to the spatial
  /// cache. 1 for non-spatial elements.
  int d_s = 1;
  bool operator==(const Element&) const = default;
};

struct MultimodalSequence {
  std::vector<Element> elements;
  RowVector label;

  std::size_t t_end() const { return elements.size(); }
  int num_classes() const { return static_cast<int>(label.size()); }
  int true_class() const;
  /// Modality tags joined by '>'.
  std::string signature() const;

  bool operator==(const MultimodalSequence& o) const {
    return elements == o.elements && label == o.label;
  }
};

/// One-hot row of length `classes`.
RowVector one_hot(int index, int classes);

/// Throws std::invalid_argument describing the first violated invariant:
/// nonempty elements, label of length > 1 that is one-hot, d_s >= 1 and
/// d_s > 1 only for grids.
void validate(const MultimodalSequence& seq);

/// Maps modality tags to the payload encoding they carry.
class ModalityRegistry {
 public:
  void add(const std::string& tag, PayloadKind kind);
  bool contains(const std::string& tag) const { return kinds_.count(tag) > 0; }
  /// Throws naming the tag when it is not registered.
  PayloadKind kind(const std::string& tag) const;
  const std::map<std::string, PayloadKind>& entries() const { return kinds_; }

  /// image, text, structured, images_a, images_b, embedding.
  static ModalityRegistry defaults();

 private:
  std::map<std::string, PayloadKind> kinds_;
};

}  // namespace mmec
