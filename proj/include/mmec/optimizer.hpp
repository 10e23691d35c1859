#pragma once

#include "mmec/params.hpp"

#include <vector>

namespace mmec {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected first and second moment estimates, one moment
/// pair per parameter in the store.
class Adam {
 public:
  Adam(const ParameterStore& store, AdamConfig config);

  /// Applies one update from the current gradients. `grad_scale` multiplies
  /// every gradient first (e.g. 1/batch for mean losses).
  void step(ParameterStore& store, double grad_scale = 1.0);
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace mmec
