#include "mmec/config.hpp"

#include "mmec/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mmec {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument("config key " + key + ": not a number: " + v);
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument("config key " + key + ": not an integer: " + v);
  return i;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t u = 0;
  try {
    u = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-') {
    throw std::invalid_argument("config key " + key + ": not an unsigned integer: " + v);
  }
  return u;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string tier_list(const std::vector<FeatureTier>& tiers) {
  static constexpr const char* kNames[] = {"none", "low", "high"};
  std::string s;
  for (FeatureTier t : tiers) {
    if (!s.empty()) s += ',';
    s += kNames[static_cast<int>(t)];
  }
  return s;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key=value");
    kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

bool apply_train_key(TrainConfig& c, const std::string& k, const std::string& v) {
  if (k == "objective") c.objective = method_from_string(v);
  else if (k == "mu") c.mu = to_double(k, v);
  else if (k == "lambda") c.lambda = to_double(k, v);
  else if (k == "rho") c.rho = to_double(k, v);
  else if (k == "batch_size") c.batch_size = static_cast<int>(to_int(k, v));
  else if (k == "learning_rate") c.learning_rate = to_double(k, v);
  else if (k == "epochs") c.epochs = static_cast<int>(to_int(k, v));
  else if (k == "seed") c.seed = to_u64(k, v);
  else if (k == "d_model") c.d_model = static_cast<int>(to_int(k, v));
  else if (k == "heads") c.heads = static_cast<int>(to_int(k, v));
  else if (k == "head_dim") c.head_dim = static_cast<int>(to_int(k, v));
  else if (k == "head_hidden") c.head_hidden = static_cast<int>(to_int(k, v));
  else if (k == "depth") c.depth = static_cast<int>(to_int(k, v));
  else if (k == "embedding_dim") c.embedding_dim = static_cast<int>(to_int(k, v));
  else if (k == "eval_every") c.eval_every = static_cast<int>(to_int(k, v));
  else if (k == "larm_rollouts") c.larm_rollouts = static_cast<int>(to_int(k, v));
  else return false;
  return true;
}

bool apply_generator_key(GeneratorConfig& c, const std::string& k, const std::string& v) {
  if (k == "gen_seed") c.seed = to_u64(k, v);
  else if (k == "samples") c.samples = static_cast<int>(to_int(k, v));
  else if (k == "class_balance") c.class_balance = to_double(k, v);
  else if (k == "noise") c.noise = to_double(k, v);
  else if (k == "grid_size") c.grid_size = static_cast<int>(to_int(k, v));
  else if (k == "patch_size") c.patch_size = static_cast<int>(to_int(k, v));
  else if (k == "concept_count") c.concept_count = static_cast<int>(to_int(k, v));
  else if (k == "generic_vocab") c.generic_vocab = static_cast<int>(to_int(k, v));
  else if (k == "concept_vocab") c.concept_vocab = static_cast<int>(to_int(k, v));
  else if (k == "word_slots") c.word_slots = static_cast<int>(to_int(k, v));
  else if (k == "max_generic_words") c.max_generic_words = static_cast<int>(to_int(k, v));
  else if (k == "max_specific_words") c.max_specific_words = static_cast<int>(to_int(k, v));
  else if (k == "feature_cardinality") c.feature_cardinality = static_cast<int>(to_int(k, v));
  else if (k == "missing_none") c.missing_probability[0] = to_double(k, v);
  else if (k == "missing_low") c.missing_probability[1] = to_double(k, v);
  else if (k == "missing_high") c.missing_probability[2] = to_double(k, v);
  else if (k == "reveal_probability") c.reveal_probability = to_double(k, v);
  else if (k == "insertion_gap") c.insertion_gap = static_cast<int>(to_int(k, v));
  else if (k == "text_vocab") c.text_vocab = static_cast<int>(to_int(k, v));
  else if (k == "text_tokens") c.text_tokens = static_cast<int>(to_int(k, v));
  else if (k == "feature_tiers") {
    c.feature_tiers.clear();
    for (const std::string& t : split_commas(v)) {
      if (t == "none") c.feature_tiers.push_back(FeatureTier::kNone);
      else if (t == "low") c.feature_tiers.push_back(FeatureTier::kLow);
      else if (t == "high") c.feature_tiers.push_back(FeatureTier::kHigh);
      else if (!t.empty()) throw std::invalid_argument("config key feature_tiers: unknown tier " + t);
    }
  } else {
    return false;
  }
  return true;
}

void apply_config(const KeyValues& kv, TrainConfig& train, GeneratorConfig& gen, KeyValues* extra) {
  for (const auto& [k, v] : kv) {
    if (apply_train_key(train, k, v) || apply_generator_key(gen, k, v)) continue;
    if (k == "mu_list" || k == "trials" || k == "holdout") {
      if (extra) extra->emplace_back(k, v);
      continue;
    }
    throw std::invalid_argument("unknown config key: " + k);
  }
}

KeyValues to_key_values(const TrainConfig& c) {
  return {{"objective", to_string(c.objective)},
          {"mu", csv_double(c.mu)},
          {"lambda", csv_double(c.lambda)},
          {"rho", csv_double(c.rho)},
          {"batch_size", std::to_string(c.batch_size)},
          {"learning_rate", csv_double(c.learning_rate)},
          {"epochs", std::to_string(c.epochs)},
          {"seed", std::to_string(c.seed)},
          {"d_model", std::to_string(c.d_model)},
          {"heads", std::to_string(c.heads)},
          {"head_dim", std::to_string(c.head_dim)},
          {"head_hidden", std::to_string(c.head_hidden)},
          {"depth", std::to_string(c.depth)},
          {"embedding_dim", std::to_string(c.embedding_dim)},
          {"eval_every", std::to_string(c.eval_every)},
          {"larm_rollouts", std::to_string(c.larm_rollouts)}};
}

KeyValues to_key_values(const GeneratorConfig& c) {
  return {{"gen_seed", std::to_string(c.seed)},
          {"samples", std::to_string(c.samples)},
          {"class_balance", csv_double(c.class_balance)},
          {"noise", csv_double(c.noise)},
          {"grid_size", std::to_string(c.grid_size)},
          {"patch_size", std::to_string(c.patch_size)},
          {"concept_count", std::to_string(c.concept_count)},
          {"generic_vocab", std::to_string(c.generic_vocab)},
          {"concept_vocab", std::to_string(c.concept_vocab)},
          {"word_slots", std::to_string(c.word_slots)},
          {"max_generic_words", std::to_string(c.max_generic_words)},
          {"max_specific_words", std::to_string(c.max_specific_words)},
          {"feature_tiers", tier_list(c.feature_tiers)},
          {"feature_cardinality", std::to_string(c.feature_cardinality)},
          {"missing_none", csv_double(c.missing_probability[0])},
          {"missing_low", csv_double(c.missing_probability[1])},
          {"missing_high", csv_double(c.missing_probability[2])},
          {"reveal_probability", csv_double(c.reveal_probability)},
          {"insertion_gap", std::to_string(c.insertion_gap)},
          {"text_vocab", std::to_string(c.text_vocab)},
          {"text_tokens", std::to_string(c.text_tokens)}};
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& item : split_commas(s)) {
    if (!item.empty()) out.push_back(to_double("list", item));
  }
  return out;
}

}  // namespace mmec
