#pragma once

#include "mmec/graph.hpp"
#include "mmec/model.hpp"
#include "mmec/random.hpp"

#include <cstddef>
#include <vector>

namespace mmec {

enum class Action { kWait = 0, kStop = 1 };

struct RewardParams {
  double mu = 0.0;
  void validate() const;
};

struct CISConfig {
  double mu = 0.0;
  double lambda = 1.0;
  void validate() const;
};

struct LARMConfig {
  double mu = 0.0;
  double rho = 0.9;
  void validate() const;
};

/// -mu for wait; -mu - CE(y, y_hat) for stop. Waiting at t == t_end is
/// treated as stop. Steps are 1-based.
double step_reward(const RowVector& y, const RowVector& y_hat, Action action, std::size_t t, std::size_t t_end,
                   double mu);

/// r(y, y_hat_T, T) = -CE(y, y_hat_T) - mu T, with T 1-based.
double episode_return(const RowVector& y, const Matrix& y_hat, std::size_t T, double mu);

/// Earliest argmax over t of r(y, y_hat_t, t); 1-based.
std::size_t cis_optimal_stop(const RowVector& y, const Matrix& y_hat, double mu);

/// Rows t < T_opt are (1, 0) (wait), the rest (0, 1) (stop).
Matrix cis_target_policy(std::size_t t_opt, std::size_t t_end);

/// L_y + lambda L_pi. Stopping targets are computed from the current y_hat
/// values and held fixed (no gradient through the argmax).
Var cis_loss(const RowVector& y, const StepOutputs& out, const CISConfig& cfg);

/// Wait-force mask: entry t true => the wait factor at step t is set to 1.
using WaitForceMask = std::vector<bool>;

WaitForceMask sample_wait_force_mask(std::size_t t_end, double rho, Rng& rng);

/// P(A_T) for T = 1..T_end as a 1 x T_end row. The final step always stops, so
/// the entries sum to 1. An empty mask forces nothing.
Var larm_stop_probabilities(Var pi, const WaitForceMask& mask = {});
RowVector larm_stop_probabilities(const Matrix& pi, const WaitForceMask& mask = {});

/// CE(y, sum_T y_hat_T P(A_T)) + mu sum_T T P(A_T) for a fixed mask.
Var larm_loss(const RowVector& y, const StepOutputs& out, double mu, const WaitForceMask& mask);

/// Samples the wait-force mask with probability rho per step.
Var larm_loss(const RowVector& y, const StepOutputs& out, const LARMConfig& cfg, Rng& rng);

}  // namespace mmec
