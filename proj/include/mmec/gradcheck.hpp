#pragma once

#include "mmec/graph.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mmec {

/// Builds a scalar loss on the given graph. Must be deterministic.
using LossClosure = std::function<Var(Graph&)>;

struct GradCheckOptions {
  double epsilon = 1e-3;
  /// Coordinates sampled uniformly over all parameters; 0 means check every one.
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients against central finite differences.
/// Relative error per coordinate is |a - n| / max(1e-8, |a| + |n|).
/// Parameter grads are zeroed before and left holding the analytic gradient.
GradCheckResult grad_check(const LossClosure& loss, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

}  // namespace mmec
