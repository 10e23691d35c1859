#include "mmec/checkpoint.hpp"
#include "mmec/config.hpp"
#include "mmec/csv.hpp"
#include "mmec/datagen.hpp"
#include "mmec/jsonl.hpp"
#include "mmec/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir;
  int workers = 1;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json key_values_json(const mmec::KeyValues& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)), started_(utc_now()) {}
  void artifact(const fs::path& p) { artifacts_.push_back(p.string()); }
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  /// Written last; every listed artifact must already exist.
  fs::path write(const fs::path& dir) const {
    json j = extra_;
    j["command"] = command_;
    j["version"] = kVersion;
    j["artifacts"] = artifacts_;
    j["started"] = started_;
    j["finished"] = utc_now();
    for (const std::string& a : artifacts_) {
      if (!fs::exists(a)) throw std::runtime_error("manifest artifact missing: " + a);
    }
    const fs::path p = dir / (command_ + ".manifest.json");
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot open for writing: " + p.string());
    out << j.dump(2) << '\n';
    return p;
  }

 private:
  std::string command_;
  std::string started_;
  std::vector<std::string> artifacts_;
  json extra_ = json::object();
};

struct Configs {
  mmec::TrainConfig train;
  mmec::GeneratorConfig gen;
  mmec::KeyValues extra;
};

Configs load_configs(const Globals& g) {
  Configs c;
  if (!g.config.empty()) {
    mmec::KeyValues kv;
    try {
      kv = mmec::read_key_values_file(g.config);
      mmec::apply_config(kv, c.train, c.gen, &c.extra);
    } catch (const std::invalid_argument& e) {
      throw UsageError(g.config + ": " + e.what());
    }
  }
  if (g.seed) {
    c.train.seed = *g.seed;
    c.gen.seed = *g.seed;
  }
  return c;
}

std::string extra_value(const Configs& c, const std::string& key) {
  for (const auto& [k, v] : c.extra) {
    if (k == key) return v;
  }
  return "";
}

fs::path prepare_out_dir(const Globals& g, const fs::path& fallback) {
  const fs::path dir = g.out_dir.empty() ? fallback : fs::path(g.out_dir);
  if (!dir.empty()) fs::create_directories(dir);
  return dir.empty() ? fs::path(".") : dir;
}

// generate

struct GenerateArgs {
  std::string task;
  std::optional<int> n;
  std::string output;
};

int cmd_generate(const Globals& g, const GenerateArgs& a) {
  Configs c = load_configs(g);
  if (a.n) c.gen.samples = *a.n;
  try {
    c.gen.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto data = a.task == "paired" ? mmec::generate_paired_dataset(c.gen)
                                       : mmec::generate_structured_arrival_dataset(c.gen);
  const fs::path out = a.output;
  const fs::path dir = prepare_out_dir(g, out.parent_path());
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  mmec::save_jsonl(out.string(), data);

  Manifest m("generate");
  m.set("task", a.task);
  m.set("seed", c.gen.seed);
  m.set("samples", data.size());
  m.set("config", key_values_json(mmec::to_key_values(c.gen)));
  m.artifact(out);
  m.write(dir);
  std::cout << "wrote " << data.size() << " sequences to " << out.string() << '\n';
  return 0;
}

// train / sweep

struct TrainArgs {
  std::string data;
  std::string validation;
  std::optional<std::string> objective;
  std::optional<double> mu;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<double> holdout;
  std::string mu_list;
  std::optional<int> trials;
};

struct Datasets {
  std::vector<mmec::MultimodalSequence> train, validation;
};

Datasets load_datasets(const TrainArgs& a, const Configs& c) {
  if (!fs::exists(a.data)) throw std::runtime_error("dataset not found: " + a.data);
  Datasets d;
  auto all = mmec::load_jsonl(a.data);
  if (all.empty()) throw std::runtime_error("dataset is empty: " + a.data);
  if (!a.validation.empty()) {
    if (!fs::exists(a.validation)) throw std::runtime_error("dataset not found: " + a.validation);
    d.train = std::move(all);
    d.validation = mmec::load_jsonl(a.validation);
    return d;
  }
  double holdout = 0.1;
  const std::string from_config = extra_value(c, "holdout");
  if (!from_config.empty()) holdout = std::stod(from_config);
  if (a.holdout) holdout = *a.holdout;
  mmec::Split s = mmec::split(all, holdout, c.train.seed);
  d.train = std::move(s.train);
  d.validation = std::move(s.validation);
  return d;
}

void apply_train_flags(const TrainArgs& a, Configs& c) {
  try {
    if (a.objective) c.train.objective = mmec::method_from_string(*a.objective);
    if (a.mu) c.train.mu = *a.mu;
    if (a.epochs) c.train.epochs = *a.epochs;
    if (a.learning_rate) c.train.learning_rate = *a.learning_rate;
    if (a.batch_size) c.train.batch_size = *a.batch_size;
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  Configs c = load_configs(g);
  apply_train_flags(a, c);
  const Datasets d = load_datasets(a, c);
  const std::string tag = mmec::to_string(c.train.objective);
  const mmec::TrainResult r = mmec::train(d.train, d.validation, c.train);

  const fs::path dir = prepare_out_dir(g, "mmec_out");
  Manifest m("train");
  const fs::path model = dir / ("model_" + tag + ".json");
  const fs::path log = dir / ("training_log_" + tag + ".csv");
  const fs::path points = dir / ("points_" + tag + ".csv");
  const fs::path rollouts = dir / ("rollouts_" + tag + ".csv");
  mmec::save_checkpoint(model.string(), r.model);
  mmec::write_training_log_csv(log.string(), r.log);
  mmec::write_points_csv(points.string(), r.points);
  mmec::write_rollouts_csv(rollouts.string(), r.final_rollouts);
  for (const fs::path& p : {model, log, points, rollouts}) m.artifact(p);
  m.set("objective", tag);
  m.set("seed", c.train.seed);
  m.set("dataset", a.data);
  m.set("config", key_values_json(mmec::to_key_values(c.train)));
  m.write(dir);
  const mmec::TradeoffPoint& last = r.points.back();
  std::cout << tag << ": epoch " << last.epoch << " mean_T " << last.mean_t << " accuracy " << last.accuracy << '\n';
  return 0;
}

int cmd_sweep(const Globals& g, const TrainArgs& a) {
  Configs c = load_configs(g);
  apply_train_flags(a, c);
  std::vector<double> mu_list = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  int trials = 3;
  try {
    const std::string cfg_mu = extra_value(c, "mu_list");
    if (!cfg_mu.empty()) mu_list = mmec::parse_double_list(cfg_mu);
    if (!a.mu_list.empty()) mu_list = mmec::parse_double_list(a.mu_list);
    const std::string cfg_trials = extra_value(c, "trials");
    if (!cfg_trials.empty()) trials = std::stoi(cfg_trials);
    if (a.trials) trials = *a.trials;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (mu_list.empty() || trials < 1) throw UsageError("sweep needs a nonempty mu list and trials >= 1");
  const Datasets d = load_datasets(a, c);
  const std::string tag = mmec::to_string(c.train.objective);

  const fs::path dir = prepare_out_dir(g, "mmec_out");
  fs::create_directories(dir / "checkpoints");
  fs::create_directories(dir / "logs");
  Manifest m("sweep");
  std::mutex mu;
  const mmec::SweepResult s =
      mmec::sweep(d.train, d.validation, c.train, mu_list, trials, g.workers, [&](const mmec::SweepCell& cell) {
        const std::string stem = tag + "_mu" + std::to_string(cell.mu_index) + "_trial" + std::to_string(cell.trial);
        std::lock_guard<std::mutex> lock(mu);
        if (!cell.result) {
          std::cerr << "cell mu=" << cell.mu << " trial=" << cell.trial << " failed: " << cell.error << '\n';
          return;
        }
        mmec::save_checkpoint((dir / "checkpoints" / (stem + ".json")).string(), cell.result->model);
        mmec::write_training_log_csv((dir / "logs" / (stem + ".csv")).string(), cell.result->log);
        std::cerr << "cell mu=" << cell.mu << " trial=" << cell.trial << " done\n";
      });

  std::vector<mmec::RolloutResult> rollouts;
  int failures = 0;
  for (const mmec::SweepCell& cell : s.cells) {
    if (!cell.result) {
      ++failures;
      continue;
    }
    const std::string stem = tag + "_mu" + std::to_string(cell.mu_index) + "_trial" + std::to_string(cell.trial);
    m.artifact(dir / "checkpoints" / (stem + ".json"));
    m.artifact(dir / "logs" / (stem + ".csv"));
    rollouts.insert(rollouts.end(), cell.result->final_rollouts.begin(), cell.result->final_rollouts.end());
  }
  const fs::path points = dir / ("points_" + tag + ".csv");
  const fs::path pooled = dir / ("rollouts_" + tag + ".csv");
  mmec::write_points_csv(points.string(), s.points);
  mmec::write_rollouts_csv(pooled.string(), rollouts);
  if (failures > 0) {
    std::cerr << "error: " << failures << " sweep cell(s) failed\n";
    return 1;
  }
  m.artifact(points);
  m.artifact(pooled);
  json cells = json::array();
  for (const mmec::SweepCell& cell : s.cells) {
    cells.push_back({{"mu", cell.mu}, {"trial", cell.trial}, {"seed", cell.seed}});
  }
  m.set("objective", tag);
  m.set("seed", c.train.seed);
  m.set("dataset", a.data);
  m.set("mu_list", mu_list);
  m.set("trials", trials);
  m.set("cells", cells);
  m.set("config", key_values_json(mmec::to_key_values(c.train)));
  m.write(dir);
  std::cout << tag << ": " << s.cells.size() << " cells, " << s.points.size() << " points -> " << points.string()
            << '\n';
  return 0;
}

// report

struct ReportArgs {
  std::vector<std::string> points;
  std::vector<std::string> rollouts;
  int t_end = 0;
  double chance = 0.5;
  bool svg = false;
};

std::pair<std::string, std::string> labeled(const std::string& arg, const std::string& prefix) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos) return {arg.substr(0, eq), arg.substr(eq + 1)};
  std::string stem = fs::path(arg).stem().string();
  if (stem.rfind(prefix, 0) == 0) stem = stem.substr(prefix.size());
  return {stem, arg};
}

std::string svg_frontiers(const std::vector<mmec::LabeledFrontier>& frontiers, int t_end) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::map<std::string, int> color_of;
  const double w = 480, h = 360, pad = 40;
  auto x = [&](double t) { return pad + (w - 2 * pad) * (t - 1.0) / std::max(1, t_end - 1); };
  auto y = [&](double a) { return h - pad - (h - 2 * pad) * a; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 8 << "\">mean T</text>\n";
  s << "<text x=\"4\" y=\"" << pad - 12 << "\">accuracy</text>\n";
  for (const mmec::LabeledFrontier& f : frontiers) {
    const auto [it, fresh] = color_of.try_emplace(f.method, static_cast<int>(color_of.size()) % 6);
    const char* color = kColors[it->second];
    s << "<g class=\"frontier\" data-method=\"" << f.method << "\" data-trial=\"" << f.trial << "\">\n";
    for (const mmec::TradeoffPoint& p : f.frontier.points) {
      s << "<circle cx=\"" << x(p.mean_t) << "\" cy=\"" << y(p.accuracy) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    }
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string svg_histogram(const mmec::StoppingStats& stats) {
  const double w = 480, h = 320, pad = 40;
  std::size_t max_t = 1, max_count = 1;
  for (const auto& [t, n] : stats.histogram) {
    max_t = std::max(max_t, t);
    max_count = std::max(max_count, n);
  }
  const double bar = (w - 2 * pad) / static_cast<double>(max_t);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  for (const auto& [t, n] : stats.histogram) {
    const double bh = (h - 2 * pad) * static_cast<double>(n) / static_cast<double>(max_count);
    s << "<rect x=\"" << pad + bar * static_cast<double>(t - 1) << "\" y=\"" << h - pad - bh << "\" width=\""
      << bar * 0.9 << "\" height=\"" << bh << "\" data-t=\"" << t << "\" data-count=\"" << n << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open for writing: " + p.string());
  out << text;
}

int cmd_report(const Globals& g, const ReportArgs& a) {
  if (a.t_end < 2) throw UsageError("--t-end must be >= 2");
  // Read everything before writing anything.
  std::vector<mmec::LabeledFrontier> frontiers;
  for (const std::string& arg : a.points) {
    const auto [method, path] = labeled(arg, "points_");
    std::vector<mmec::TradeoffPoint> pts;
    try {
      pts = mmec::read_points_csv(path);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
    std::map<int, std::vector<mmec::TradeoffPoint>> by_trial;
    for (const auto& p : pts) by_trial[p.trial].push_back(p);
    if (by_trial.empty()) throw std::runtime_error(path + ": no points");
    for (auto& [trial, group] : by_trial) {
      mmec::LabeledFrontier f{method, trial, mmec::pareto_frontier(group), 0.0};
      f.auc = mmec::frontier_auc(f.frontier, static_cast<std::size_t>(a.t_end), a.chance);
      frontiers.push_back(std::move(f));
    }
  }
  std::vector<std::pair<std::string, mmec::StoppingStats>> stats;
  for (const std::string& arg : a.rollouts) {
    const auto [label, path] = labeled(arg, "rollouts_");
    std::vector<mmec::RolloutResult> rs;
    try {
      rs = mmec::read_rollouts_csv(path);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
    stats.emplace_back(label, mmec::stopping_time_histogram(rs));
  }

  const fs::path dir = prepare_out_dir(g, "mmec_report");
  Manifest m("report");
  const fs::path frontier_csv = dir / "frontier.csv";
  const fs::path auc_csv = dir / "auc_summary.csv";
  mmec::write_frontier_csv(frontier_csv.string(), frontiers);
  mmec::write_auc_summary_csv(auc_csv.string(), frontiers);
  m.artifact(frontier_csv);
  m.artifact(auc_csv);
  for (const auto& [label, st] : stats) {
    const fs::path hist = dir / ("histogram_" + label + ".csv");
    const fs::path flows = dir / ("flows_" + label + ".csv");
    mmec::write_histogram_csv(hist.string(), st);
    mmec::write_flow_csv(flows.string(), st);
    m.artifact(hist);
    m.artifact(flows);
    if (a.svg) {
      const fs::path svg = dir / ("histogram_" + label + ".svg");
      write_text(svg, svg_histogram(st));
      m.artifact(svg);
    }
  }
  if (a.svg) {
    const fs::path svg = dir / "frontier.svg";
    write_text(svg, svg_frontiers(frontiers, a.t_end));
    m.artifact(svg);
  }
  m.set("t_end", a.t_end);
  m.set("chance", a.chance);
  m.set("inputs", a.points);
  m.write(dir);

  std::map<std::string, std::pair<double, int>> mean;
  for (const auto& f : frontiers) {
    mean[f.method].first += f.auc;
    mean[f.method].second += 1;
  }
  for (const auto& [method, t] : mean) {
    std::cout << method << ": mean AUC " << mmec::csv_double(t.first / t.second) << " over " << t.second
              << " trial(s)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early multimodal classification: data generation, training, sweeps and reports"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->configurable(false);
  app.add_option("--config", g.config, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--workers", g.workers, "Concurrent sweep cells")->check(CLI::PositiveNumber);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic JSON Lines dataset");
  generate->fallthrough();
  generate->add_option("--task", gen.task, "paired | structured-arrival")
      ->required()
      ->check(CLI::IsMember({"paired", "structured-arrival"}));
  generate->add_option("--n", gen.n, "Number of sequences")->check(CLI::NonNegativeNumber);
  generate->add_option("-o,--output", gen.output, "Dataset path")->required();

  TrainArgs tr;
  auto add_train_options = [&](CLI::App* sub) {
    sub->fallthrough();
    sub->add_option("--data", tr.data, "Training dataset (JSON Lines)")->required();
    sub->add_option("--validation", tr.validation, "Validation dataset; default is a seeded holdout split");
    sub->add_option("--holdout", tr.holdout, "Validation fraction when --validation is absent");
    sub->add_option("--objective", tr.objective, "cis | larm")->check(CLI::IsMember({"cis", "larm"}));
    sub->add_option("--epochs", tr.epochs);
    sub->add_option("--learning-rate", tr.learning_rate);
    sub->add_option("--batch-size", tr.batch_size);
  };
  CLI::App* train = app.add_subcommand("train", "Train one model");
  add_train_options(train);
  train->add_option("--mu", tr.mu, "Time penalty");
  CLI::App* sweep = app.add_subcommand("sweep", "Train one model per (mu, trial)");
  add_train_options(sweep);
  sweep->add_option("--mu-list", tr.mu_list, "Comma-separated mu values");
  sweep->add_option("--trials", tr.trials);

  ReportArgs rep;
  CLI::App* report = app.add_subcommand("report", "Pareto frontiers, AUC summary and stopping-time tables");
  report->fallthrough();
  report->add_option("points", rep.points, "Points CSVs as label=path or path (label from points_<label>.csv)")
      ->required();
  report->add_option("--t-end", rep.t_end, "Sequence length used to normalize time")->required();
  report->add_option("--chance", rep.chance, "Accuracy left of the first frontier point");
  report->add_option("--rollouts", rep.rollouts, "Rollout CSVs for histograms, label=path or path");
  report->add_flag("--svg", rep.svg, "Also write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << failing->help();
    return 2;
  }

  try {
    if (*generate) return cmd_generate(g, gen);
    if (*train) return cmd_train(g, tr);
    if (*sweep) return cmd_sweep(g, tr);
    return cmd_report(g, rep);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
