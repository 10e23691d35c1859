#include "mmec/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mmec {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()) + ")");
  }
}

const Matrix& upstream(Graph& g, std::size_t self) { return g.node(self).grad; }

std::size_t input(Graph& g, std::size_t self, std::size_t k) { return g.node(self).inputs[k]; }

bool wants(Graph& g, std::size_t id) { return g.node(id).requires_grad; }

}  // namespace

Matrix softmax(const Matrix& x) {
  if (x.cols() == 0) throw std::invalid_argument("empty distribution");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

double cross_entropy(const RowVector& y, const RowVector& y_hat) {
  if (y.size() != y_hat.size()) throw std::invalid_argument("cross_entropy: length mismatch");
  double ce = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) continue;
    ce -= y(i) * std::log(std::clamp(y_hat(i), kProbFloor, 1.0));
  }
  return ce;
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix out = a.value() * b.value();
  return a.graph().push("matmul", std::move(out), {a, b}, [](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    const std::size_t ia = input(g, self, 0), ib = input(g, self, 1);
    if (wants(g, ia)) g.grad_buffer(ia).noalias() += up * g.node(ib).value.transpose();
    if (wants(g, ib)) g.grad_buffer(ib).noalias() += g.node(ia).value.transpose() * up;
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimensions differ");
  Matrix out = a.value() * b.value().transpose();
  return a.graph().push("matmul_nt", std::move(out), {a, b}, [](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    const std::size_t ia = input(g, self, 0), ib = input(g, self, 1);
    if (wants(g, ia)) g.grad_buffer(ia).noalias() += up * g.node(ib).value;
    if (wants(g, ib)) g.grad_buffer(ib).noalias() += up.transpose() * g.node(ia).value;
  });
}

Var operator+(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value() + b.value();
  return a.graph().push("add", std::move(out), {a, b}, [](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t in = input(g, self, k);
      if (wants(g, in)) g.grad_buffer(in) += up;
    }
  });
}

Var operator-(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value() - b.value();
  return a.graph().push("sub", std::move(out), {a, b}, [](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    const std::size_t ia = input(g, self, 0), ib = input(g, self, 1);
    if (wants(g, ia)) g.grad_buffer(ia) += up;
    if (wants(g, ib)) g.grad_buffer(ib) -= up;
  });
}

Var operator*(double s, Var a) {
  Matrix out = s * a.value();
  return a.graph().push("scale", std::move(out), {a}, [s](Graph& g, std::size_t self) {
    g.grad_buffer(input(g, self, 0)) += s * upstream(g, self);
  });
}

Var operator+(Var a, double c) {
  Matrix out = a.value().array() + c;
  return a.graph().push("add_const", std::move(out), {a}, [](Graph& g, std::size_t self) {
    g.grad_buffer(input(g, self, 0)) += upstream(g, self);
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: bad row shape");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.graph().push("add_row", std::move(out), {a, row}, [](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    const std::size_t ia = input(g, self, 0), ir = input(g, self, 1);
    if (wants(g, ia)) g.grad_buffer(ia) += up;
    if (wants(g, ir)) g.grad_buffer(ir) += up.colwise().sum();
  });
}

Var hadamard(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "hadamard");
  Matrix out = a.value().cwiseProduct(b.value());
  return a.graph().push("hadamard", std::move(out), {a, b}, [](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    const std::size_t ia = input(g, self, 0), ib = input(g, self, 1);
    if (wants(g, ia)) g.grad_buffer(ia) += up.cwiseProduct(g.node(ib).value);
    if (wants(g, ib)) g.grad_buffer(ib) += up.cwiseProduct(g.node(ia).value);
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.graph().push("relu", std::move(out), {a}, [](Graph& g, std::size_t self) {
    const std::size_t ia = input(g, self, 0);
    const Matrix& x = g.node(ia).value;
    g.grad_buffer(ia) += (x.array() > 0.0).select(upstream(g, self).array(), 0.0).matrix();
  });
}

Var log_clamped(Var a, double floor) {
  Matrix out = a.value().cwiseMax(floor).array().log();
  return a.graph().push("log", std::move(out), {a}, [floor](Graph& g, std::size_t self) {
    const std::size_t ia = input(g, self, 0);
    const Matrix& x = g.node(ia).value;
    const Matrix& up = upstream(g, self);
    g.grad_buffer(ia) += (x.array() >= floor).select(up.array() / x.array(), 0.0).matrix();
  });
}

namespace {

// dL/dx for y = softmax(x) row-wise: y * (up - <up, y>).
void softmax_backward(Graph& g, std::size_t self) {
  const std::size_t ix = input(g, self, 0);
  const Matrix& y = g.node(self).value;
  const Matrix& up = upstream(g, self);
  Matrix& gx = g.grad_buffer(ix);
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double dot = up.row(r).dot(y.row(r));
    gx.row(r).array() += y.row(r).array() * (up.row(r).array() - dot);
  }
}

}  // namespace

Var softmax_rows(Var x) {
  return x.graph().push("softmax", softmax(x.value()), {x}, softmax_backward);
}

Var masked_softmax_rows(Var x, const Mask& mask) {
  const Matrix& xv = x.value();
  if (mask.rows() != xv.rows() || mask.cols() != xv.cols()) {
    throw std::invalid_argument("masked_softmax_rows: mask shape mismatch");
  }
  if (xv.cols() == 0) throw std::invalid_argument("empty distribution");
  Matrix out = Matrix::Zero(xv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Eigen::Index c = 0; c < xv.cols(); ++c) {
      if (!mask(r, c)) continue;
      any = true;
      m = std::isnan(xv(r, c)) ? xv(r, c) : std::max(m, xv(r, c));
      if (std::isnan(m)) break;
    }
    if (!any) throw std::invalid_argument("no attendable positions");
    double total = 0.0;
    for (Eigen::Index c = 0; c < xv.cols(); ++c) {
      if (!mask(r, c)) continue;
      out(r, c) = std::exp(xv(r, c) - m);
      total += out(r, c);
    }
    out.row(r) /= total;
  }
  // Masked entries have y = 0, so the unmasked backward formula zeroes them.
  return x.graph().push("masked_softmax", std::move(out), {x}, softmax_backward);
}

Var row_normalize(Var x) {
  const Matrix& xv = x.value();
  RowVector sums = xv.rowwise().sum().transpose();
  for (Eigen::Index r = 0; r < sums.size(); ++r) {
    if (!(sums(r) > 0.0)) throw std::invalid_argument("row_normalize: nonpositive row sum");
  }
  Matrix out = xv.array().colwise() / sums.transpose().array();
  return x.graph().push("row_normalize", std::move(out), {x}, [](Graph& g, std::size_t self) {
    // y = x / s, s = sum(x): dx_j = (up_j - <up, y>) / s
    const std::size_t ix = input(g, self, 0);
    const Matrix& xv = g.node(ix).value;
    const Matrix& y = g.node(self).value;
    const Matrix& up = upstream(g, self);
    Matrix& gx = g.grad_buffer(ix);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double s = xv.row(r).sum();
      const double dot = up.row(r).dot(y.row(r));
      gx.row(r).array() += (up.row(r).array() - dot) / s;
    }
  });
}

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.cols();
  if (n < 2) throw std::invalid_argument("layer_norm: normalized axis length must be >= 2");
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
    throw std::invalid_argument("layer_norm: gain/bias shape mismatch");
  }
  Matrix xhat(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() +
               bias.value().row(0).array();
  return x.graph().push(
      "layer_norm", std::move(out), {x, gain, bias},
      [xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
        const Matrix& up = upstream(g, self);
        const std::size_t ix = input(g, self, 0), ig = input(g, self, 1), ib = input(g, self, 2);
        if (wants(g, ig)) g.grad_buffer(ig) += up.cwiseProduct(xhat).colwise().sum();
        if (wants(g, ib)) g.grad_buffer(ib) += up.colwise().sum();
        if (!wants(g, ix)) return;
        const RowVector gamma = g.node(ig).value.row(0);
        Matrix& gx = g.grad_buffer(ix);
        const double n = static_cast<double>(xhat.cols());
        for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
          const RowVector dxhat = up.row(r).cwiseProduct(gamma);
          const double mean_d = dxhat.mean();
          const double mean_dx = dxhat.dot(xhat.row(r)) / n;
          gx.row(r).array() +=
              inv_std(r) * (dxhat.array() - mean_d - xhat.row(r).array() * mean_dx);
        }
      });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph().push("sum", std::move(out), {a}, [](Graph& g, std::size_t self) {
    g.grad_buffer(input(g, self, 0)).array() += upstream(g, self)(0, 0);
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw std::invalid_argument("mean_rows: no rows");
  Matrix out = a.value().colwise().mean();
  return a.graph().push("mean_rows", std::move(out), {a}, [](Graph& g, std::size_t self) {
    const std::size_t ia = input(g, self, 0);
    Matrix& ga = g.grad_buffer(ia);
    const RowVector up = upstream(g, self).row(0) / static_cast<double>(ga.rows());
    ga.rowwise() += up;
  });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw std::out_of_range("slice_rows: range out of bounds");
  }
  Matrix out = a.value().middleRows(begin, count);
  return a.graph().push("slice_rows", std::move(out), {a}, [begin, count](Graph& g, std::size_t self) {
    g.grad_buffer(input(g, self, 0)).middleRows(begin, count) += upstream(g, self);
  });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw std::out_of_range("slice_cols: range out of bounds");
  }
  Matrix out = a.value().middleCols(begin, count);
  return a.graph().push("slice_cols", std::move(out), {a}, [begin, count](Graph& g, std::size_t self) {
    g.grad_buffer(input(g, self, 0)).middleCols(begin, count) += upstream(g, self);
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return parts.front().graph().push("concat_rows", std::move(out), parts, [](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    Eigen::Index at = 0;
    for (std::size_t in : g.node(self).inputs) {
      const Eigen::Index r = g.node(in).value.rows();
      if (wants(g, in)) g.grad_buffer(in) += up.middleRows(at, r);
      at += r;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts.front().graph().push("concat_cols", std::move(out), parts, [](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    Eigen::Index at = 0;
    for (std::size_t in : g.node(self).inputs) {
      const Eigen::Index c = g.node(in).value.cols();
      if (wants(g, in)) g.grad_buffer(in) += up.middleCols(at, c);
      at += c;
    }
  });
}

Var gather_rows(Var table, const std::vector<int>& ids) {
  const Matrix& t = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) throw std::out_of_range("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  return table.graph().push("gather_rows", std::move(out), {table}, [ids](Graph& g, std::size_t self) {
    const Matrix& up = upstream(g, self);
    Matrix& gt = g.grad_buffer(input(g, self, 0));
    for (std::size_t i = 0; i < ids.size(); ++i) gt.row(ids[i]) += up.row(static_cast<Eigen::Index>(i));
  });
}

Var pick(Var a, Eigen::Index r, Eigen::Index c) {
  if (r < 0 || c < 0 || r >= a.rows() || c >= a.cols()) throw std::out_of_range("pick: index out of bounds");
  Matrix out(1, 1);
  out(0, 0) = a.value()(r, c);
  return a.graph().push("pick", std::move(out), {a}, [r, c](Graph& g, std::size_t self) {
    g.grad_buffer(input(g, self, 0))(r, c) += upstream(g, self)(0, 0);
  });
}

Var mean_cross_entropy(const Matrix& targets, Var probs) {
  require_same_shape(targets, probs.value(), "mean_cross_entropy");
  const Matrix& p = probs.value();
  const double rows = static_cast<double>(p.rows());
  Matrix out(1, 1);
  out(0, 0) = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    out(0, 0) += cross_entropy(targets.row(r), p.row(r));
  }
  out(0, 0) /= rows;
  return probs.graph().push("mean_cross_entropy", std::move(out), {probs},
                            [targets, rows](Graph& g, std::size_t self) {
                              const std::size_t ip = input(g, self, 0);
                              const Matrix& p = g.node(ip).value;
                              const double up = upstream(g, self)(0, 0);
                              Matrix& gp = g.grad_buffer(ip);
                              for (Eigen::Index r = 0; r < p.rows(); ++r) {
                                for (Eigen::Index c = 0; c < p.cols(); ++c) {
                                  if (targets(r, c) == 0.0 || p(r, c) < kProbFloor) continue;
                                  gp(r, c) -= up * targets(r, c) / (p(r, c) * rows);
                                }
                              }
                            });
}

Attention scaled_dot_attention(Var q, Var k, Var v, const Mask& mask) {
  if (q.cols() != k.cols()) throw std::invalid_argument("attention: query/key width mismatch");
  if (k.rows() != v.rows()) throw std::invalid_argument("attention: key/value count mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Var scores = scale * matmul_nt(q, k);
  Var weights = mask.size() == 0 ? softmax_rows(scores) : masked_softmax_rows(scores, mask);
  return {matmul(weights, v), weights};
}

}  // namespace mmec
