#pragma once

#include "mmec/model.hpp"
#include "mmec/random.hpp"
#include "mmec/sequence.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mmec {

enum class Method { kCIS, kLARM };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct RolloutResult {
  /// 1-based stopping step.
  std::size_t stop_time = 1;
  int predicted = 0;
  int truth = 0;
  std::string signature;

  bool correct() const { return predicted == truth; }
};

/// First step whose stop probability strictly exceeds wait; T_end otherwise.
std::size_t cis_stop_time(const Matrix& pi);
/// Samples wait/stop per step until stop is drawn or T_end is reached.
std::size_t larm_stop_time(const Matrix& pi, Rng& rng);

RolloutResult rollout_cis(const StepValues& steps, const MultimodalSequence& seq);
RolloutResult rollout_larm(const StepValues& steps, const MultimodalSequence& seq, Rng& rng);
RolloutResult rollout_cis(Model& model, const MultimodalSequence& seq);
RolloutResult rollout_larm(Model& model, const MultimodalSequence& seq, Rng& rng);

struct TradeoffPoint {
  double mean_t = 1.0;
  double accuracy = 0.0;
  double mu = 0.0;
  int trial = 0;
  int epoch = 0;
};

using Predictor = std::function<StepValues(const MultimodalSequence&)>;

struct Evaluation {
  TradeoffPoint point;
  std::vector<RolloutResult> rollouts;
};

/// Rolls out every validation sequence with the method's inference rule.
/// LARM rollouts are stochastic; `larm_rollouts` > 1 averages repeated
/// rollouts per sample.
Evaluation evaluate(const std::vector<MultimodalSequence>& validation, const Predictor& predict, Method method,
                    Rng& rng, int larm_rollouts = 1);
Evaluation evaluate(Model& model, const std::vector<MultimodalSequence>& validation, Method method, Rng& rng,
                    int larm_rollouts = 1);

/// Non-dominated points sorted by ascending mean_t with strictly increasing
/// accuracy. Lower mean_t and higher accuracy are better.
struct Frontier {
  std::vector<TradeoffPoint> points;
};

/// q dominates p when q is no worse in both coordinates and strictly better
/// in at least one.
bool dominates(const TradeoffPoint& q, const TradeoffPoint& p);

/// Throws on empty input.
Frontier pareto_frontier(std::vector<TradeoffPoint> points);

/// Area under the frontier's step function over normalized time
/// x = (mean_t - 1) / (t_end - 1); accuracy is `chance` left of the first
/// point and held after the last.
double frontier_auc(const Frontier& frontier, std::size_t t_end, double chance);

struct StoppingStats {
  std::map<std::size_t, std::size_t> histogram;
  /// (modality-order signature, stopping step) -> count.
  std::map<std::pair<std::string, std::size_t>, std::size_t> flows;
  std::size_t total = 0;
};

StoppingStats stopping_time_histogram(const std::vector<RolloutResult>& results);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input has no variance.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mmec
