// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "protoseq/model.hpp"
#include "protoseq/trainer.hpp"

namespace protoseq {

enum class EditKind : std::uint8_t { Create, Revise, Delete };

const char *edit_kind_name(EditKind kind);
EditKind parse_edit_kind(const std::string &name);

struct RefinementEdit {
  EditKind kind = EditKind::Create;
  std::optional<std::size_t> prototype_id; // revise, delete
  std::optional<Sequence> sequence;        // create, revise
};

/// Throws std::invalid_argument (bad payload) or std::out_of_range (unknown
/// id) without touching the model.
void validate_edit(const PrototypeModel &model, const RefinementEdit &edit);

/// Applies one edit. On any error the model is left exactly as it was.
///   create: appends p = r(seq), provenance seq, zero W column
///   revise: p_i = r(seq), provenance seq, W column kept
///   delete: drops row i, its W column and provenance
void apply_edit(PrototypeModel &model, const RefinementEdit &edit);

/// Pinned fine-tuning: encoder and W train on the full objective while every
/// prototype stays equal to the encoding of its provenance. Never projects.
TrainState finetune(PrototypeModel &model, const std::vector<Sequence> &data,
                    const Hyperparams &hp, std::size_t epochs, std::uint64_t seed,
                    const TrainOptions &options = {});

/// {"op": "create"|"revise"|"delete", "prototype_id": i, "sequence": {...}}
nlohmann::json edit_to_json(const RefinementEdit &edit, const PrototypeModel &model);
RefinementEdit edit_from_json(const nlohmann::json &j, const PrototypeModel &model);

/// Append-only record of applied edits, one JSON object per line with a UTC
/// timestamp under "time".
class EditJournal {
public:
  explicit EditJournal(std::string path) : path_(std::move(path)) {}
  const std::string &path() const { return path_; }
  void append(const RefinementEdit &edit, const PrototypeModel &model) const;
  std::vector<nlohmann::json> entries() const;

private:
  std::string path_;
};

} // namespace protoseq
