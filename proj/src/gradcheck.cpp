#include "mmec/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mmec {

namespace {

double evaluate(const LossClosure& loss) {
  Graph g(false);
  return loss(g).scalar();
}

}  // namespace

GradCheckResult grad_check(const LossClosure& loss, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  {
    Graph g;
    g.backward(loss(g));
  }

  struct Coord {
    Parameter* param;
    Eigen::Index index;
  };
  std::vector<Coord> coords;
  for (Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) coords.push_back({p, i});
  }
  if (options.samples > 0 && options.samples < coords.size()) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.samples);
  }

  GradCheckResult result;
  for (const Coord& c : coords) {
    double& x = c.param->value.data()[c.index];
    const double saved = x;
    x = saved + options.epsilon;
    const double plus = evaluate(loss);
    x = saved - options.epsilon;
    const double minus = evaluate(loss);
    x = saved;
    const double numeric = (plus - minus) / (2.0 * options.epsilon);
    const double analytic = c.param->grad.data()[c.index];
    const double rel =
        std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    result.max_relative_error = std::max(result.max_relative_error, rel);
    ++result.coordinates;
  }
  return result;
}

}  // namespace mmec
