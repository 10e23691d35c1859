#include "mmec/csv.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mmec {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  f.push_back(cur);
  return f;
}

template <typename T>
T parse_field(const std::string& s, std::size_t line_no, const char* column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + column + " value '" + s + "'");
  }
  return v;
}

/// Reads rows after validating the header; calls `row` with the fields.
template <typename Fn>
void read_rows(const std::string& path, const std::string& header, std::size_t columns, Fn row) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw std::runtime_error("line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw std::runtime_error("line 1: expected header '" + header + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != columns) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                               " fields, got " + std::to_string(fields.size()));
    }
    row(fields, line_no);
  }
}

}  // namespace

std::string csv_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("csv_double: formatting failed");
  return std::string(buf, ptr);
}

void write_points_csv(const std::string& path, const std::vector<TradeoffPoint>& points) {
  auto out = open_out(path);
  out << "mu,trial,epoch,mean_T,accuracy\n";
  for (const TradeoffPoint& p : points) {
    out << csv_double(p.mu) << ',' << p.trial << ',' << p.epoch << ',' << csv_double(p.mean_t) << ','
        << csv_double(p.accuracy) << '\n';
  }
}

std::vector<TradeoffPoint> read_points_csv(const std::string& path) {
  std::vector<TradeoffPoint> points;
  read_rows(path, "mu,trial,epoch,mean_T,accuracy", 5, [&](const auto& f, std::size_t n) {
    TradeoffPoint p;
    p.mu = parse_field<double>(f[0], n, "mu");
    p.trial = parse_field<int>(f[1], n, "trial");
    p.epoch = parse_field<int>(f[2], n, "epoch");
    p.mean_t = parse_field<double>(f[3], n, "mean_T");
    p.accuracy = parse_field<double>(f[4], n, "accuracy");
    points.push_back(p);
  });
  return points;
}

void write_frontier_csv(const std::string& path, const std::vector<LabeledFrontier>& frontiers) {
  auto out = open_out(path);
  out << "method,trial,mu,epoch,mean_T,accuracy\n";
  for (const LabeledFrontier& f : frontiers) {
    for (const TradeoffPoint& p : f.frontier.points) {
      out << f.method << ',' << f.trial << ',' << csv_double(p.mu) << ',' << p.epoch << ','
          << csv_double(p.mean_t) << ',' << csv_double(p.accuracy) << '\n';
    }
  }
}

void write_auc_summary_csv(const std::string& path, const std::vector<LabeledFrontier>& frontiers) {
  std::map<std::string, std::pair<double, int>> totals;
  for (const LabeledFrontier& f : frontiers) {
    auto& t = totals[f.method];
    t.first += f.auc;
    t.second += 1;
  }
  auto out = open_out(path);
  out << "method,trial,auc,mean_auc\n";
  for (const LabeledFrontier& f : frontiers) {
    const auto& t = totals[f.method];
    out << f.method << ',' << f.trial << ',' << csv_double(f.auc) << ',' << csv_double(t.first / t.second) << '\n';
  }
}

void write_histogram_csv(const std::string& path, const StoppingStats& stats) {
  auto out = open_out(path);
  out << "T,count\n";
  for (const auto& [t, count] : stats.histogram) out << t << ',' << count << '\n';
}

void write_flow_csv(const std::string& path, const StoppingStats& stats) {
  auto out = open_out(path);
  out << "signature,T,count\n";
  for (const auto& [key, count] : stats.flows) out << key.first << ',' << key.second << ',' << count << '\n';
}

void write_training_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  auto out = open_out(path);
  out << "epoch,loss,mean_T,accuracy\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << csv_double(e.loss) << ',';
    if (e.point) out << csv_double(e.point->mean_t) << ',' << csv_double(e.point->accuracy);
    else out << ',';
    out << '\n';
  }
}

void write_rollouts_csv(const std::string& path, const std::vector<RolloutResult>& rollouts) {
  auto out = open_out(path);
  out << "stop_time,predicted,truth,signature\n";
  for (const RolloutResult& r : rollouts) {
    out << r.stop_time << ',' << r.predicted << ',' << r.truth << ',' << r.signature << '\n';
  }
}

std::vector<RolloutResult> read_rollouts_csv(const std::string& path) {
  std::vector<RolloutResult> rollouts;
  read_rows(path, "stop_time,predicted,truth,signature", 4, [&](const auto& f, std::size_t n) {
    RolloutResult r;
    r.stop_time = parse_field<std::size_t>(f[0], n, "stop_time");
    r.predicted = parse_field<int>(f[1], n, "predicted");
    r.truth = parse_field<int>(f[2], n, "truth");
    r.signature = f[3];
    rollouts.push_back(std::move(r));
  });
  return rollouts;
}

}  // namespace mmec
