#pragma once

#include "mmec/datagen.hpp"
#include "mmec/trainer.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mmec {

/// Ordered key=value pairs. Blank lines and lines starting with '#' are
/// skipped; whitespace around keys and values is trimmed.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Throws "line N: ..." when a line has no '='.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values_file(const std::string& path);

/// Each returns false when `key` is not one of the struct's keys; malformed
/// values throw.
bool apply_train_key(TrainConfig& cfg, const std::string& key, const std::string& value);
bool apply_generator_key(GeneratorConfig& cfg, const std::string& key, const std::string& value);

/// Applies every pair to the train and generator configs. Sweep-only keys
/// (`mu_list`, `trials`, `holdout`) are returned in `extra`. Throws
/// "unknown config key: K" for anything else.
void apply_config(const KeyValues& kv, TrainConfig& train, GeneratorConfig& gen, KeyValues* extra = nullptr);

KeyValues to_key_values(const TrainConfig& cfg);
KeyValues to_key_values(const GeneratorConfig& cfg);

/// Comma-separated doubles, e.g. "1e-3,1e-2".
std::vector<double> parse_double_list(const std::string& s);

}  // namespace mmec
