#include "mmec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mmec {

const char* to_string(Method m) { return m == Method::kCIS ? "cis" : "larm"; }

Method method_from_string(const std::string& s) {
  if (s == "cis") return Method::kCIS;
  if (s == "larm") return Method::kLARM;
  throw std::invalid_argument("unknown objective: " + s + " (expected cis or larm)");
}

std::size_t cis_stop_time(const Matrix& pi) {
  const auto t_end = static_cast<std::size_t>(pi.rows());
  for (std::size_t t = 0; t < t_end; ++t) {
    if (pi(static_cast<Eigen::Index>(t), 1) > pi(static_cast<Eigen::Index>(t), 0)) return t + 1;
  }
  return t_end;
}

std::size_t larm_stop_time(const Matrix& pi, Rng& rng) {
  const auto t_end = static_cast<std::size_t>(pi.rows());
  for (std::size_t t = 0; t + 1 < t_end; ++t) {
    if (bernoulli(rng, pi(static_cast<Eigen::Index>(t), 1))) return t + 1;
  }
  return t_end;
}

namespace {

RolloutResult classify_at(const StepValues& steps, const MultimodalSequence& seq, std::size_t stop) {
  RolloutResult r;
  r.stop_time = stop;
  Eigen::Index cls = 0;
  steps.y_hat.row(static_cast<Eigen::Index>(stop - 1)).maxCoeff(&cls);
  r.predicted = static_cast<int>(cls);
  r.truth = seq.true_class();
  r.signature = seq.signature();
  return r;
}

}  // namespace

RolloutResult rollout_cis(const StepValues& steps, const MultimodalSequence& seq) {
  return classify_at(steps, seq, cis_stop_time(steps.pi));
}

RolloutResult rollout_larm(const StepValues& steps, const MultimodalSequence& seq, Rng& rng) {
  return classify_at(steps, seq, larm_stop_time(steps.pi, rng));
}

RolloutResult rollout_cis(Model& model, const MultimodalSequence& seq) {
  return rollout_cis(model.predict(seq), seq);
}

RolloutResult rollout_larm(Model& model, const MultimodalSequence& seq, Rng& rng) {
  return rollout_larm(model.predict(seq), seq, rng);
}

Evaluation evaluate(const std::vector<MultimodalSequence>& validation, const Predictor& predict, Method method,
                    Rng& rng, int larm_rollouts) {
  if (validation.empty()) throw std::invalid_argument("evaluate: empty validation set");
  const int repeats = method == Method::kLARM ? std::max(1, larm_rollouts) : 1;
  Evaluation ev;
  double time_sum = 0.0;
  std::size_t correct = 0;
  for (const MultimodalSequence& seq : validation) {
    const StepValues steps = predict(seq);
    for (int k = 0; k < repeats; ++k) {
      RolloutResult r = method == Method::kCIS ? rollout_cis(steps, seq) : rollout_larm(steps, seq, rng);
      time_sum += static_cast<double>(r.stop_time);
      correct += r.correct() ? 1 : 0;
      ev.rollouts.push_back(std::move(r));
    }
  }
  const auto n = static_cast<double>(ev.rollouts.size());
  ev.point.mean_t = time_sum / n;
  ev.point.accuracy = static_cast<double>(correct) / n;
  return ev;
}

Evaluation evaluate(Model& model, const std::vector<MultimodalSequence>& validation, Method method, Rng& rng,
                    int larm_rollouts) {
  return evaluate(
      validation, [&model](const MultimodalSequence& s) { return model.predict(s); }, method, rng, larm_rollouts);
}

bool dominates(const TradeoffPoint& q, const TradeoffPoint& p) {
  const bool no_worse = q.mean_t <= p.mean_t && q.accuracy >= p.accuracy;
  const bool better = q.mean_t < p.mean_t || q.accuracy > p.accuracy;
  return no_worse && better;
}

Frontier pareto_frontier(std::vector<TradeoffPoint> points) {
  if (points.empty()) throw std::invalid_argument("pareto_frontier: no points");
  std::stable_sort(points.begin(), points.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    if (a.mean_t != b.mean_t) return a.mean_t < b.mean_t;
    return a.accuracy > b.accuracy;
  });
  Frontier f;
  for (const TradeoffPoint& p : points) {
    if (f.points.empty() || p.accuracy > f.points.back().accuracy) f.points.push_back(p);
  }
  return f;
}

double frontier_auc(const Frontier& frontier, std::size_t t_end, double chance) {
  if (t_end < 2) throw std::invalid_argument("frontier_auc: T_end must be >= 2");
  if (frontier.points.empty()) return chance;
  const double span = static_cast<double>(t_end - 1);
  auto norm = [&](double t) { return std::clamp((t - 1.0) / span, 0.0, 1.0); };
  double area = chance * norm(frontier.points.front().mean_t);
  for (std::size_t i = 0; i < frontier.points.size(); ++i) {
    const double from = norm(frontier.points[i].mean_t);
    const double to = i + 1 < frontier.points.size() ? norm(frontier.points[i + 1].mean_t) : 1.0;
    area += frontier.points[i].accuracy * (to - from);
  }
  return area;
}

StoppingStats stopping_time_histogram(const std::vector<RolloutResult>& results) {
  if (results.empty()) throw std::invalid_argument("stopping_time_histogram: no results");
  StoppingStats s;
  for (const RolloutResult& r : results) {
    ++s.histogram[r.stop_time];
    ++s.flows[{r.signature, r.stop_time}];
    ++s.total;
  }
  return s;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mmec
