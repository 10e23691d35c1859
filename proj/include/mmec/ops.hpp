#pragma once

#include "mmec/graph.hpp"

#include <vector>

namespace mmec {

// Plain (non-recording) kernels.

/// Row-wise softmax with max subtraction. Throws "empty distribution" for
/// zero columns.
Matrix softmax(const Matrix& x);

/// -log(y_hat[true class]) with y_hat clamped to [1e-12, 1]. `y` must be
/// one-hot (or, for soft targets, any nonnegative weights: -sum y_i log y_hat_i).
double cross_entropy(const RowVector& y, const RowVector& y_hat);

inline constexpr double kProbFloor = 1e-12;
inline constexpr double kLayerNormEps = 1e-5;

// Differentiable ops. All inputs must live on the same Graph.

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(double s, Var a);
Var operator+(Var a, double c);
/// Adds a 1 x n row to every row of `a`.
Var add_row(Var a, Var row);
Var hadamard(Var a, Var b);
Var relu(Var a);
/// log(max(a, floor)); zero gradient where clamped.
Var log_clamped(Var a, double floor = kProbFloor);

Var softmax_rows(Var x);
/// Softmax restricted to `mask`-true entries; masked entries get weight 0.
/// Throws "no attendable positions" when a row has no true entry.
Var masked_softmax_rows(Var x, const Mask& mask);
/// Divides every row by its sum. Rows must have positive sums.
Var row_normalize(Var x);
Var layer_norm_rows(Var x, Var gain, Var bias, double eps = kLayerNormEps);

Var sum(Var a);
/// Column means, 1 x cols.
Var mean_rows(Var a);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
/// Rows `ids` of `table`, stacked in order.
Var gather_rows(Var table, const std::vector<int>& ids);
/// Element (r, c) as a 1x1 tensor.
Var pick(Var a, Eigen::Index r, Eigen::Index c);

/// Cross-entropy of a fixed target row against each row of probabilities,
/// averaged over rows: mean_t -sum_c target(t,c) log clamp(p(t,c)).
Var mean_cross_entropy(const Matrix& targets, Var probs);

/// Result of scaled dot-product attention.
struct Attention {
  Var output;
  Var weights;
};

/// weights = softmax(Q K^T / sqrt(d_k)) restricted to `mask` (if non-empty),
/// output = weights V.
Attention scaled_dot_attention(Var q, Var k, Var v, const Mask& mask = Mask());

}  // namespace mmec
