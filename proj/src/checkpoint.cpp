#include "mmec/checkpoint.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace mmec {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "mmec-checkpoint";
constexpr int kVersion = 1;

json spec_to_json(const PeripheralSpec& s) {
  return {{"modality", s.modality},       {"kind", to_string(s.kind)}, {"vocab_size", s.vocab_size},
          {"embedding_dim", s.embedding_dim}, {"grid_h", s.grid_h},     {"grid_w", s.grid_w},
          {"patch", s.patch},             {"cardinalities", s.cardinalities}, {"input_dim", s.input_dim}};
}

PeripheralSpec spec_from_json(const json& j) {
  PeripheralSpec s;
  s.modality = j.at("modality").get<std::string>();
  s.kind = extractor_from_string(j.at("kind").get<std::string>());
  s.vocab_size = j.at("vocab_size").get<int>();
  s.embedding_dim = j.at("embedding_dim").get<int>();
  s.grid_h = j.at("grid_h").get<int>();
  s.grid_w = j.at("grid_w").get<int>();
  s.patch = j.at("patch").get<int>();
  s.cardinalities = j.at("cardinalities").get<std::vector<int>>();
  s.input_dim = j.at("input_dim").get<int>();
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  const ModelConfig& c = model.config();
  json peripherals = json::array();
  for (const PeripheralSpec& s : c.peripherals) peripherals.push_back(spec_to_json(s));
  json params = json::array();
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    const Parameter& p = model.params().at(i);
    std::vector<double> values(p.value.data(), p.value.data() + p.value.size());
    params.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"values", values}});
  }
  const json doc = {{"format", kFormat},
                    {"version", kVersion},
                    {"config",
                     {{"d_model", c.d_model},
                      {"heads", c.heads},
                      {"head_dim", c.head_dim},
                      {"head_hidden", c.head_hidden},
                      {"classes", c.classes},
                      {"depth", c.depth},
                      {"seed", c.seed},
                      {"peripherals", peripherals}}},
                    {"params", params}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  const json doc = json::parse(in);
  if (doc.value("format", "") != kFormat) throw std::runtime_error("not a checkpoint: " + path);
  if (doc.at("version").get<int>() != kVersion) throw std::runtime_error("unsupported checkpoint version");

  const json& c = doc.at("config");
  ModelConfig cfg;
  cfg.d_model = c.at("d_model").get<int>();
  cfg.heads = c.at("heads").get<int>();
  cfg.head_dim = c.at("head_dim").get<int>();
  cfg.head_hidden = c.at("head_hidden").get<int>();
  cfg.classes = c.at("classes").get<int>();
  cfg.depth = c.at("depth").get<int>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  for (const json& s : c.at("peripherals")) cfg.peripherals.push_back(spec_from_json(s));

  Model model(std::move(cfg));
  const json& params = doc.at("params");
  if (params.size() != model.params().size()) throw std::runtime_error("checkpoint parameter count mismatch");
  for (const json& p : params) {
    const std::string name = p.at("name").get<std::string>();
    Parameter* target = model.params().find(name);
    if (!target) throw std::runtime_error("checkpoint has unknown parameter: " + name);
    const auto shape = p.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2 || shape[0] != target->value.rows() || shape[1] != target->value.cols()) {
      throw std::runtime_error("shape mismatch for parameter " + name);
    }
    const auto values = p.at("values").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != target->value.size()) {
      throw std::runtime_error("value count mismatch for parameter " + name);
    }
    target->value = Eigen::Map<const Matrix>(values.data(), shape[0], shape[1]);
  }
  return model;
}

}  // namespace mmec
