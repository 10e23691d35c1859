#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace mmec {

/// Dense row-major matrix of doubles. Every tensor in the library is 2-D;
/// vectors are stored as 1 x n rows.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A trainable tensor. `grad` accumulates across backward passes until
/// zero_grad() is called.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Graph;

/// Handle to a node on a Graph. Cheap to copy; only valid while the owning
/// graph is alive.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  double scalar() const;

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Tape of operations recorded in topological order. Each node owns its
/// forward value; backward() replays the tape in exact reverse order.
///
/// Gradient contract: leaves created with requires_grad and Parameters
/// accumulate gradient across backward() calls. Callers zero them between
/// optimizer steps.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool is_leaf = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  /// With record_grad = false no backward closures are stored and every node
  /// is treated as a constant (inference mode).
  explicit Graph(bool record_grad = true) : record_grad_(record_grad) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var leaf(Matrix value, bool requires_grad);
  Var param(Parameter& p);

  /// Appends an op node. `backward` is dropped when no input requires grad.
  Var push(std::string op, Matrix value, std::vector<Var> inputs, BackwardFn backward);

  void backward(Var loss);

  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return record_grad_; }

  /// Gradient buffer of `id`, allocated as zeros on first access.
  Matrix& grad_buffer(std::size_t id);

 private:
  bool record_grad_;
  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return graph_->node(id_).value; }
inline const Matrix& Var::grad() const { return graph_->node(id_).grad; }
inline bool Var::requires_grad() const { return graph_->node(id_).requires_grad; }

}  // namespace mmec
