#include "mmec/objectives.hpp"

#include "mmec/ops.hpp"

#include <stdexcept>

namespace mmec {

void RewardParams::validate() const {
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
}

void CISConfig::validate() const {
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
}

void LARMConfig::validate() const {
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
}

double step_reward(const RowVector& y, const RowVector& y_hat, Action action, std::size_t t, std::size_t t_end,
                   double mu) {
  if (action == Action::kWait && t < t_end) return -mu;
  return -mu - cross_entropy(y, y_hat);
}

double episode_return(const RowVector& y, const Matrix& y_hat, std::size_t T, double mu) {
  if (T < 1 || T > static_cast<std::size_t>(y_hat.rows())) throw std::out_of_range("episode_return: T out of range");
  return -cross_entropy(y, y_hat.row(static_cast<Eigen::Index>(T - 1))) - mu * static_cast<double>(T);
}

std::size_t cis_optimal_stop(const RowVector& y, const Matrix& y_hat, double mu) {
  if (y_hat.rows() == 0) throw std::invalid_argument("cis_optimal_stop: empty prediction sequence");
  std::size_t best_t = 1;
  double best = episode_return(y, y_hat, 1, mu);
  for (std::size_t t = 2; t <= static_cast<std::size_t>(y_hat.rows()); ++t) {
    const double r = episode_return(y, y_hat, t, mu);
    if (r > best) {
      best = r;
      best_t = t;
    }
  }
  return best_t;
}

Matrix cis_target_policy(std::size_t t_opt, std::size_t t_end) {
  if (t_opt < 1 || t_opt > t_end) throw std::out_of_range("cis_target_policy: T out of range");
  Matrix target = Matrix::Zero(static_cast<Eigen::Index>(t_end), 2);
  for (std::size_t t = 1; t <= t_end; ++t) target(static_cast<Eigen::Index>(t - 1), t < t_opt ? 0 : 1) = 1.0;
  return target;
}

Var cis_loss(const RowVector& y, const StepOutputs& out, const CISConfig& cfg) {
  cfg.validate();
  const Eigen::Index t_end = out.y_hat.rows();
  Matrix labels = y.replicate(t_end, 1);
  const Var classifier_term = mean_cross_entropy(labels, out.y_hat);
  const std::size_t t_opt = cis_optimal_stop(y, out.y_hat.value(), cfg.mu);
  const Var policy_term = mean_cross_entropy(cis_target_policy(t_opt, static_cast<std::size_t>(t_end)), out.pi);
  return classifier_term + cfg.lambda * policy_term;
}

WaitForceMask sample_wait_force_mask(std::size_t t_end, double rho, Rng& rng) {
  WaitForceMask mask(t_end);
  for (std::size_t t = 0; t < t_end; ++t) mask[t] = bernoulli(rng, rho);
  return mask;
}

Var larm_stop_probabilities(Var pi, const WaitForceMask& mask) {
  const Eigen::Index t_end = pi.rows();
  if (pi.cols() != 2) throw std::invalid_argument("larm_stop_probabilities: policy rows must have 2 actions");
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != t_end) {
    throw std::invalid_argument("larm_stop_probabilities: mask length differs from T_end");
  }
  Graph& g = pi.graph();
  std::vector<Var> probs;
  Var survive;  // product of wait factors before step t; invalid == 1
  for (Eigen::Index t = 0; t < t_end; ++t) {
    const bool last = t + 1 == t_end;
    if (last) {
      probs.push_back(survive.valid() ? survive : g.constant(Matrix::Ones(1, 1)));
      break;
    }
    // A forced wait has wait factor 1 and therefore stop factor 0.
    if (!mask.empty() && mask[static_cast<std::size_t>(t)]) {
      probs.push_back(g.constant(Matrix::Zero(1, 1)));
      continue;
    }
    const Var stop = pick(pi, t, 1);
    probs.push_back(survive.valid() ? hadamard(survive, stop) : stop);
    const Var wait = pick(pi, t, 0);
    survive = survive.valid() ? hadamard(survive, wait) : wait;
  }
  return concat_cols(probs);
}

RowVector larm_stop_probabilities(const Matrix& pi, const WaitForceMask& mask) {
  Graph g(false);
  return larm_stop_probabilities(g.constant(pi), mask).value().row(0);
}

Var larm_loss(const RowVector& y, const StepOutputs& out, double mu, const WaitForceMask& mask) {
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
  Graph& g = out.pi.graph();
  const Var p = larm_stop_probabilities(out.pi, mask);
  const Var mixture = matmul(p, out.y_hat);
  Matrix steps(p.cols(), 1);
  for (Eigen::Index t = 0; t < p.cols(); ++t) steps(t, 0) = static_cast<double>(t + 1);
  const Var expected_time = matmul(p, g.constant(std::move(steps)));
  return mean_cross_entropy(y, mixture) + mu * expected_time;
}

Var larm_loss(const RowVector& y, const StepOutputs& out, const LARMConfig& cfg, Rng& rng) {
  cfg.validate();
  return larm_loss(y, out, cfg.mu, sample_wait_force_mask(static_cast<std::size_t>(out.pi.rows()), cfg.rho, rng));
}

}  // namespace mmec
