// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "protoseq/model.hpp"

namespace protoseq {

inline constexpr const char *kCheckpointFormat = "protoseq-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Full model state as JSON: encoder configuration and tensors, prototypes,
/// weights, provenance, vocabulary, class names and hyperparameters. Doubles
/// round-trip exactly.
nlohmann::json checkpoint_to_json(const PrototypeModel &model);

/// Throws std::runtime_error on a wrong format tag, unsupported version,
/// missing tensor or shape mismatch.
PrototypeModel checkpoint_from_json(const nlohmann::json &j);

/// Checks the model invariants, writes to a temporary file beside `path` and
/// renames it into place, so a reader never sees a partial checkpoint.
void save_checkpoint(const PrototypeModel &model, const std::string &path);
PrototypeModel load_checkpoint(const std::string &path);

/// Writes `text` to `path` through a temporary file and rename.
void write_file_atomic(const std::string &path, const std::string &text);

} // namespace protoseq
