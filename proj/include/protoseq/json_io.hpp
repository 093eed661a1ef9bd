// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "protoseq/sequence.hpp"
#include "protoseq/tensor.hpp"

namespace protoseq {

/// {"tokens": [...]}, {"events": [[...]]} or {"values": [[...]]}. Token ids
/// are written as words when `vocab` is given, as integers otherwise.
nlohmann::json sequence_to_json(const Sequence &seq, const Vocabulary *vocab);

/// Inverse of sequence_to_json; also accepts {"text": "..."} for token
/// sequences. Labels are not read.
Sequence sequence_from_json(const nlohmann::json &j, StepKind kind, std::size_t width,
                            const Vocabulary *vocab);

nlohmann::json tensor_to_json(const Tensor &t);
Tensor tensor_from_json(const nlohmann::json &j);

} // namespace protoseq
