#include "mmec/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mmec {

Adam::Adam(const ParameterStore& store, AdamConfig config) : config_(config) {
  if (!(config_.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Matrix& v = store.at(i).value;
    m_.push_back(Matrix::Zero(v.rows(), v.cols()));
    v_.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
}

void Adam::step(ParameterStore& store, double grad_scale) {
  if (store.size() != m_.size()) throw std::invalid_argument("Adam::step: store layout changed");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store.at(i);
    const Matrix g = grad_scale * p.grad;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.value.array() -= config_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace mmec
