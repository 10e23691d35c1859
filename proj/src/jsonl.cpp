#include "mmec/jsonl.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace mmec {

using nlohmann::json;

namespace {

json payload_to_json(const Payload& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TokenIds>) return v.ids;
        else if constexpr (std::is_same_v<T, Grid>) return json{{"h", v.h}, {"w", v.w}, {"pixels", v.pixels}};
        else return v.values;
      },
      p);
}

Payload payload_from_json(const json& j, PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kTokens: return TokenIds{j.get<std::vector<int>>()};
    case PayloadKind::kGrid:
      return Grid{j.at("h").get<int>(), j.at("w").get<int>(), j.at("pixels").get<std::vector<double>>()};
    case PayloadKind::kCategorical: return Categorical{j.get<std::vector<int>>()};
    case PayloadKind::kDense: return Dense{j.get<std::vector<double>>()};
  }
  throw std::logic_error("unhandled payload kind");
}

}  // namespace

std::string to_json_line(const MultimodalSequence& seq) {
  json elements = json::array();
  for (const Element& e : seq.elements) {
    elements.push_back({{"modality", e.modality}, {"d_s", e.d_s}, {"payload", payload_to_json(e.payload)}});
  }
  std::vector<double> label(seq.label.data(), seq.label.data() + seq.label.size());
  return json{{"label", label}, {"elements", std::move(elements)}}.dump();
}

MultimodalSequence from_json_line(const std::string& line, const ModalityRegistry& registry) {
  const json j = json::parse(line);
  MultimodalSequence seq;
  const auto label = j.at("label").get<std::vector<double>>();
  seq.label = Eigen::Map<const RowVector>(label.data(), static_cast<Eigen::Index>(label.size()));
  for (const json& e : j.at("elements")) {
    const std::string tag = e.at("modality").get<std::string>();
    const PayloadKind kind = registry.kind(tag);
    seq.elements.push_back({payload_from_json(e.at("payload"), kind), tag, e.at("d_s").get<int>()});
  }
  validate(seq);
  return seq;
}

void save_jsonl(const std::string& path, const std::vector<MultimodalSequence>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const MultimodalSequence& s : data) out << to_json_line(s) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<MultimodalSequence> load_jsonl(const std::string& path, const ModalityRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::vector<MultimodalSequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(from_json_line(line, registry));
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mmec
