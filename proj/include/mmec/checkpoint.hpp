#pragma once

#include "mmec/model.hpp"

#include <string>

namespace mmec {

/// JSON container:
///   {"format": "mmec-checkpoint", "version": 1,
///    "config": {model geometry + peripheral specs},
///    "params": [{"name": s, "shape": [rows, cols], "values": [row-major]}]}
/// Doubles are written with round-trip precision.
void save_checkpoint(const std::string& path, const Model& model);

/// Rebuilds the model from the stored config and restores every parameter.
/// Throws on unknown format, missing parameters or shape mismatch.
Model load_checkpoint(const std::string& path);

}  // namespace mmec
