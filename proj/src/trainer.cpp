#include "mmec/trainer.hpp"

#include "mmec/objectives.hpp"
#include "mmec/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace mmec {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
}

ModelConfig TrainConfig::model_config(std::vector<PeripheralSpec> peripherals, int classes) const {
  ModelConfig m;
  m.d_model = d_model;
  m.heads = heads;
  m.head_dim = head_dim;
  m.head_hidden = head_hidden;
  m.classes = classes;
  m.depth = depth;
  m.seed = derive_seed(seed, {0});
  m.peripherals = std::move(peripherals);
  return m;
}

TrainingDiverged::TrainingDiverged(int epoch, int batch, const std::string& detail)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch) + ": " + detail),
      epoch_(epoch),
      batch_(batch) {}

Var objective_loss(const MultimodalSequence& seq, const StepOutputs& out, const TrainConfig& cfg, Rng& rng) {
  if (cfg.objective == Method::kCIS) return cis_loss(seq.label, out, CISConfig{cfg.mu, cfg.lambda});
  return larm_loss(seq.label, out, LARMConfig{cfg.mu, cfg.rho}, rng);
}

TrainResult train(const std::vector<MultimodalSequence>& train_set,
                  const std::vector<MultimodalSequence>& validation, const TrainConfig& cfg,
                  std::vector<PeripheralSpec> peripherals) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (validation.empty()) throw std::invalid_argument("train: empty validation set");
  if (peripherals.empty()) {
    std::vector<MultimodalSequence> all = train_set;
    all.insert(all.end(), validation.begin(), validation.end());
    peripherals = infer_peripherals(all, cfg.embedding_dim);
  }

  TrainResult result{Model(cfg.model_config(std::move(peripherals), train_set.front().num_classes())), {}, {}, {}};
  Model& model = result.model;
  Adam adam(model.params(), AdamConfig{cfg.learning_rate});
  Rng shuffle_rng(derive_seed(cfg.seed, {1}));
  Rng mask_rng(derive_seed(cfg.seed, {2}));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    int batch = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size), ++batch) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      model.params().zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const MultimodalSequence& seq = train_set[order[i]];
        Graph g;
        const Var loss = objective_loss(seq, model.forward(g, seq), cfg, mask_rng);
        const double value = loss.scalar();
        if (!std::isfinite(value)) throw TrainingDiverged(epoch, batch, "non-finite loss");
        batch_loss += value;
        g.backward(loss);
      }
      adam.step(model.params(), 1.0 / static_cast<double>(end - start));
      loss_sum += batch_loss;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(train_set.size());
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      Rng eval_rng(derive_seed(cfg.seed, {3, static_cast<std::uint64_t>(epoch)}));
      Evaluation ev = evaluate(model, validation, cfg.objective, eval_rng, cfg.larm_rollouts);
      ev.point.mu = cfg.mu;
      ev.point.epoch = epoch;
      entry.point = ev.point;
      result.points.push_back(ev.point);
      result.final_rollouts = std::move(ev.rollouts);
    }
    result.log.push_back(entry);
  }
  return result;
}

std::uint64_t sweep_cell_seed(std::uint64_t base_seed, int mu_index, int trial) {
  return derive_seed(base_seed, {static_cast<std::uint64_t>(mu_index), static_cast<std::uint64_t>(trial)});
}

SweepResult sweep(const std::vector<MultimodalSequence>& train_set,
                  const std::vector<MultimodalSequence>& validation, const TrainConfig& base,
                  const std::vector<double>& mu_list, int trials, int workers,
                  const std::function<void(const SweepCell&)>& on_cell_done) {
  if (mu_list.empty()) throw std::invalid_argument("sweep: empty mu list");
  if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
  base.validate();

  std::vector<MultimodalSequence> all = train_set;
  all.insert(all.end(), validation.begin(), validation.end());
  const std::vector<PeripheralSpec> peripherals = infer_peripherals(all, base.embedding_dim);

  SweepResult out;
  for (std::size_t m = 0; m < mu_list.size(); ++m) {
    for (int trial = 0; trial < trials; ++trial) {
      SweepCell cell;
      cell.mu = mu_list[m];
      cell.mu_index = static_cast<int>(m);
      cell.trial = trial;
      cell.seed = sweep_cell_seed(base.seed, cell.mu_index, trial);
      out.cells.push_back(std::move(cell));
    }
  }

  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (std::size_t i = next++; i < out.cells.size(); i = next++) {
      SweepCell& cell = out.cells[i];
      TrainConfig cfg = base;
      cfg.mu = cell.mu;
      cfg.seed = cell.seed;
      try {
        cell.result = train(train_set, validation, cfg, peripherals);
        for (TradeoffPoint& p : cell.result->points) p.trial = cell.trial;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      if (on_cell_done) on_cell_done(cell);
    }
  };
  const int n_threads = std::clamp(workers, 1, static_cast<int>(out.cells.size()));
  if (n_threads == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
  }

  for (const SweepCell& cell : out.cells) {
    if (cell.result) out.points.insert(out.points.end(), cell.result->points.begin(), cell.result->points.end());
  }
  return out;
}

}  // namespace mmec
