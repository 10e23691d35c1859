#include "mmec/sequence.hpp"

#include <cmath>
#include <stdexcept>

namespace mmec {

PayloadKind payload_kind(const Payload& p) {
  return static_cast<PayloadKind>(p.index());
}

const char* to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::kTokens: return "tokens";
    case PayloadKind::kGrid: return "grid";
    case PayloadKind::kCategorical: return "categorical";
    case PayloadKind::kDense: return "dense";
  }
  return "?";
}

int MultimodalSequence::true_class() const {
  Eigen::Index idx = 0;
  label.maxCoeff(&idx);
  return static_cast<int>(idx);
}

std::string MultimodalSequence::signature() const {
  std::string s;
  for (const Element& e : elements) {
    if (!s.empty()) s += '>';
    s += e.modality;
  }
  return s;
}

RowVector one_hot(int index, int classes) {
  if (index < 0 || index >= classes) throw std::out_of_range("one_hot: index out of range");
  RowVector v = RowVector::Zero(classes);
  v(index) = 1.0;
  return v;
}

void validate(const MultimodalSequence& seq) {
  if (seq.elements.empty()) throw std::invalid_argument("sequence has no elements");
  if (seq.label.size() < 2) throw std::invalid_argument("label must have at least 2 classes");
  int ones = 0;
  for (Eigen::Index i = 0; i < seq.label.size(); ++i) {
    const double v = seq.label(i);
    if (v == 1.0) ++ones;
    else if (v != 0.0) throw std::invalid_argument("label is not one-hot");
  }
  if (ones != 1) {
    throw std::invalid_argument("label must sum to 1 (got " + std::to_string(seq.label.sum()) + ")");
  }
  for (const Element& e : seq.elements) {
    if (e.d_s < 1) throw std::invalid_argument("d_s must be >= 1");
    const bool grid = std::holds_alternative<Grid>(e.payload);
    if (e.d_s > 1 && !grid) throw std::invalid_argument("d_s > 1 only allowed for grid payloads");
    if (grid) {
      const Grid& g = std::get<Grid>(e.payload);
      if (g.h <= 0 || g.w <= 0 || static_cast<std::size_t>(g.h) * g.w != g.pixels.size()) {
        throw std::invalid_argument("grid payload size does not match h*w");
      }
    }
  }
}

void ModalityRegistry::add(const std::string& tag, PayloadKind kind) { kinds_[tag] = kind; }

PayloadKind ModalityRegistry::kind(const std::string& tag) const {
  auto it = kinds_.find(tag);
  if (it == kinds_.end()) throw std::invalid_argument("unknown modality tag: " + tag);
  return it->second;
}

ModalityRegistry ModalityRegistry::defaults() {
  ModalityRegistry r;
  r.add("image", PayloadKind::kGrid);
  r.add("text", PayloadKind::kTokens);
  r.add("structured", PayloadKind::kCategorical);
  r.add("images_a", PayloadKind::kGrid);
  r.add("images_b", PayloadKind::kGrid);
  r.add("embedding", PayloadKind::kDense);
  return r;
}

}  // namespace mmec
