#pragma once

#include "mmec/eval.hpp"
#include "mmec/trainer.hpp"

#include <string>
#include <vector>

namespace mmec {

/// Shortest decimal form that round-trips to the same double.
std::string csv_double(double v);

/// Header: mu,trial,epoch,mean_T,accuracy
void write_points_csv(const std::string& path, const std::vector<TradeoffPoint>& points);
/// Throws "line N: ..." on malformed rows.
std::vector<TradeoffPoint> read_points_csv(const std::string& path);

struct LabeledFrontier {
  std::string method;
  int trial = 0;
  Frontier frontier;
  double auc = 0.0;
};

/// Header: method,trial,mu,epoch,mean_T,accuracy
void write_frontier_csv(const std::string& path, const std::vector<LabeledFrontier>& frontiers);
/// Header: method,trial,auc,mean_auc
void write_auc_summary_csv(const std::string& path, const std::vector<LabeledFrontier>& frontiers);
/// Header: T,count
void write_histogram_csv(const std::string& path, const StoppingStats& stats);
/// Header: signature,T,count
void write_flow_csv(const std::string& path, const StoppingStats& stats);
/// Header: epoch,loss,mean_T,accuracy (empty fields for unevaluated epochs)
void write_training_log_csv(const std::string& path, const std::vector<EpochLog>& log);
/// Header: stop_time,predicted,truth,signature
void write_rollouts_csv(const std::string& path, const std::vector<RolloutResult>& rollouts);
std::vector<RolloutResult> read_rollouts_csv(const std::string& path);

}  // namespace mmec
