#pragma once

#include "mmec/sequence.hpp"

#include <string>
#include <vector>

namespace mmec {

/// One JSON Lines record:
///   {"label": [..], "elements": [{"modality": s, "d_s": n, "payload": ..}]}
/// Payloads: token ids and categorical values (-1 = MISSING) as integer
/// arrays, grids as {"h", "w", "pixels"}, dense vectors as float arrays.
std::string to_json_line(const MultimodalSequence& seq);

/// Parses and validates one record. Payload decoding follows the registry
/// entry of each element's modality.
MultimodalSequence from_json_line(const std::string& line,
                                  const ModalityRegistry& registry = ModalityRegistry::defaults());

void save_jsonl(const std::string& path, const std::vector<MultimodalSequence>& data);

/// Throws std::runtime_error prefixed with "line N:" on malformed records.
std::vector<MultimodalSequence> load_jsonl(const std::string& path,
                                           const ModalityRegistry& registry = ModalityRegistry::defaults());

}  // namespace mmec
