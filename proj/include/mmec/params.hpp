#pragma once

#include "mmec/graph.hpp"
#include "mmec/random.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace mmec {

/// Owns a model's Parameters. Indices returned by add() stay valid for the
/// store's lifetime, so stores can be copied freely.
class ParameterStore {
 public:
  std::size_t add(std::string name, Matrix init);
  Parameter& at(std::size_t i) { return params_.at(i); }
  const Parameter& at(std::size_t i) const { return params_.at(i); }
  /// nullptr when absent.
  Parameter* find(const std::string& name);
  std::size_t size() const { return params_.size(); }
  std::vector<Parameter*> all();
  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> params_;
};

/// Glorot-uniform rows x cols.
Matrix xavier(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Lazily binds store entries to graph nodes so each parameter appears once
/// per graph.
class Binder {
 public:
  Binder(Graph& g, ParameterStore& store) : graph_(g), store_(store), bound_(store.size()) {}
  Var operator()(std::size_t index);
  Graph& graph() const { return graph_; }

 private:
  Graph& graph_;
  ParameterStore& store_;
  std::vector<Var> bound_;
};

}  // namespace mmec
