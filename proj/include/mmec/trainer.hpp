#pragma once

#include "mmec/encoder.hpp"
#include "mmec/eval.hpp"
#include "mmec/model.hpp"
#include "mmec/sequence.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmec {

struct TrainConfig {
  Method objective = Method::kCIS;
  double mu = 1e-3;
  double lambda = 1.0;
  double rho = 0.9;
  int batch_size = 128;
  double learning_rate = 1e-5;
  int epochs = 10;
  std::uint64_t seed = 0;
  int d_model = 32;
  int heads = 8;
  int head_dim = 64;
  int head_hidden = 100;
  int depth = 1;
  int embedding_dim = 16;
  /// Evaluate every N epochs (the final epoch is always evaluated).
  int eval_every = 1;
  int larm_rollouts = 1;

  void validate() const;
  ModelConfig model_config(std::vector<PeripheralSpec> peripherals, int classes) const;
};

/// Thrown when a minibatch loss is not finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, int batch, const std::string& detail);
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

struct EpochLog {
  int epoch = 0;
  /// Mean per-sample training loss over the epoch.
  double loss = 0.0;
  std::optional<TradeoffPoint> point;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  std::vector<TradeoffPoint> points;
  /// Rollouts of the last evaluation.
  std::vector<RolloutResult> final_rollouts;
};

/// Per-sample training loss for the configured objective.
Var objective_loss(const MultimodalSequence& seq, const StepOutputs& out, const TrainConfig& cfg, Rng& rng);

/// Trains one model with minibatch Adam. Peripherals are inferred from
/// train + validation when `peripherals` is empty. Deterministic in cfg.seed.
TrainResult train(const std::vector<MultimodalSequence>& train_set,
                  const std::vector<MultimodalSequence>& validation, const TrainConfig& cfg,
                  std::vector<PeripheralSpec> peripherals = {});

struct SweepCell {
  double mu = 0.0;
  int mu_index = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::optional<TrainResult> result;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  /// Every per-epoch point of every successful cell, in cell order.
  std::vector<TradeoffPoint> points;
};

/// Seed of cell (mu_index, trial).
std::uint64_t sweep_cell_seed(std::uint64_t base_seed, int mu_index, int trial);

/// One independent model per (mu, trial), run on up to `workers` threads.
/// Cell failures are recorded in SweepCell::error without stopping others.
/// `on_cell_done` (optional) runs on the worker thread after each cell.
SweepResult sweep(const std::vector<MultimodalSequence>& train_set,
                  const std::vector<MultimodalSequence>& validation, const TrainConfig& base,
                  const std::vector<double>& mu_list, int trials, int workers = 1,
                  const std::function<void(const SweepCell&)>& on_cell_done = {});

}  // namespace mmec
