#include "mmec/graph.hpp"

#include <stdexcept>

namespace mmec {

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw std::invalid_argument("scalar(): tensor is not 1x1");
  }
  return v(0, 0);
}

Var Graph::constant(Matrix value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  n.is_leaf = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.is_leaf = true;
  n.requires_grad = requires_grad && record_grad_;
  if (n.requires_grad) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::param(Parameter& p) {
  Node n;
  n.op = "param";
  n.value = p.value;
  n.is_leaf = true;
  n.requires_grad = record_grad_;
  n.param = record_grad_ ? &p : nullptr;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::push(std::string op, Matrix value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (&in.graph() != this) throw std::invalid_argument("push(): input from another graph");
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad && record_grad_) n.backward = std::move(backward);
  else n.requires_grad = false;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Matrix& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw std::invalid_argument("backward(): loss from another graph");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("backward(): loss must be a scalar");
  }
  if (!nodes_[loss.id()].requires_grad) return;

  // Intermediate and parameter-node buffers restart from zero; plain leaves keep
  // accumulating.
  for (Node& n : nodes_) {
    if (!n.requires_grad) continue;
    if (!n.is_leaf || n.param) n.grad.setZero(n.value.rows(), n.value.cols());
  }
  nodes_[loss.id()].grad(0, 0) = 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.is_leaf || !n.backward) continue;
    n.backward(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.param) n.param->grad += n.grad;
  }
}

}  // namespace mmec
