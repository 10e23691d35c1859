#include "mmec/params.hpp"

#include <cmath>

namespace mmec {

std::size_t ParameterStore::add(std::string name, Matrix init) {
  params_.emplace_back(std::move(name), std::move(init));
  return params_.size() - 1;
}

Parameter* ParameterStore::find(const std::string& name) {
  for (Parameter& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

void ParameterStore::zero_grad() {
  for (Parameter& p : params_) p.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Matrix xavier(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Var Binder::operator()(std::size_t index) {
  Var& v = bound_.at(index);
  if (!v.valid()) v = graph_.param(store_.at(index));
  return v;
}

}  // namespace mmec
