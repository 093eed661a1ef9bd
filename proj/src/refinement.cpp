// SPDX-License-Identifier: Apache-2.0
#include "protoseq/refinement.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "protoseq/explainer.hpp"
#include "protoseq/json_io.hpp"

namespace protoseq {

using nlohmann::json;

const char *edit_kind_name(EditKind kind) {
  switch (kind) {
  case EditKind::Create: return "create";
  case EditKind::Revise: return "revise";
  case EditKind::Delete: return "delete";
  }
  return "create";
}

EditKind parse_edit_kind(const std::string &name) {
  if (name == "create") return EditKind::Create;
  if (name == "revise") return EditKind::Revise;
  if (name == "delete") return EditKind::Delete;
  throw std::invalid_argument("unknown edit op '" + name + "' (expected create, revise or delete)");
}

void validate_edit(const PrototypeModel &model, const RefinementEdit &edit) {
  if (edit.kind != EditKind::Create) {
    if (!edit.prototype_id)
      throw std::invalid_argument(std::string(edit_kind_name(edit.kind)) + " needs a prototype id");
    if (*edit.prototype_id >= model.k())
      throw std::out_of_range("prototype " + std::to_string(*edit.prototype_id) +
                              " does not exist");
  }
  if (edit.kind == EditKind::Delete) {
    if (model.k() <= 1)
      throw std::invalid_argument("cannot delete the last prototype");
    return;
  }
  if (!edit.sequence)
    throw std::invalid_argument(std::string(edit_kind_name(edit.kind)) + " needs a sequence");
  const Sequence &s = *edit.sequence;
  const EncoderConfig &ec = model.encoder.config();
  if (s.empty())
    throw std::invalid_argument("edit sequence is empty");
  if (s.kind != ec.input_kind)
    throw std::invalid_argument(std::string("edit sequence is ") + step_kind_name(s.kind) +
                                ", model reads " + step_kind_name(ec.input_kind));
  if (s.kind == StepKind::Token) {
    for (auto id : s.tokens)
      if (id < 0 || static_cast<std::size_t>(id) >= ec.vocab_size)
        throw std::invalid_argument("edit sequence has token id " + std::to_string(id) +
                                    " outside the vocabulary");
  } else if (s.width != ec.input_width) {
    throw std::invalid_argument("edit sequence width " + std::to_string(s.width) + " != " +
                                std::to_string(ec.input_width));
  }
}

void apply_edit(PrototypeModel &model, const RefinementEdit &edit) {
  validate_edit(model, edit);
  if (edit.kind == EditKind::Delete) {
    remove_prototypes(model, {*edit.prototype_id});
    return;
  }
  // Everything that can throw happens before the model is touched.
  const auto e = model.encoder.embed(*edit.sequence);
  if (edit.kind == EditKind::Revise) {
    const std::size_t i = *edit.prototype_id;
    std::copy(e.begin(), e.end(), model.prototypes.value.row(i).begin());
    model.provenance[i] = *edit.sequence;
    return;
  }
  const std::size_t k = model.k(), m = model.prototypes.value.cols, C = model.num_classes;
  Tensor P(k + 1, m), W(C, k + 1);
  std::copy(model.prototypes.value.data.begin(), model.prototypes.value.data.end(), P.data.begin());
  std::copy(e.begin(), e.end(), P.row(k).begin());
  for (std::size_t r = 0; r < C; ++r)
    for (std::size_t i = 0; i < k; ++i)
      W(r, i) = model.weights.value(r, i);
  auto prov = model.provenance;
  prov.push_back(*edit.sequence);

  model.prototypes.value = std::move(P);
  model.prototypes.grad = Tensor();
  model.weights.value = std::move(W);
  model.weights.grad = Tensor();
  model.provenance = std::move(prov);
  model.hparams.prototypes = k + 1;
}

TrainState finetune(PrototypeModel &model, const std::vector<Sequence> &data,
                    const Hyperparams &hp, std::size_t epochs, std::uint64_t seed,
                    const TrainOptions &options) {
  for (std::size_t i = 0; i < model.k(); ++i)
    if (!model.provenance[i])
      throw std::invalid_argument("prototype " + std::to_string(i) +
                                  " has no provenance; pinned fine-tuning needs one per prototype");
  TrainState state;
  state.seed = seed;
  state.lr = hp.learning_rate(1);
  if (epochs == 0) {
    refresh_pinned_prototypes(model);
    return state;
  }
  run_epochs(model, data, hp, epochs, PrototypeMode::Pinned, state, options);
  return state;
}

namespace {

const Vocabulary *token_vocab(const PrototypeModel &model) {
  return model.encoder.config().input_kind == StepKind::Token ? &model.vocab : nullptr;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace

json edit_to_json(const RefinementEdit &edit, const PrototypeModel &model) {
  json j = {{"op", edit_kind_name(edit.kind)}};
  if (edit.prototype_id)
    j["prototype_id"] = *edit.prototype_id;
  if (edit.sequence)
    j["sequence"] = sequence_to_json(*edit.sequence, token_vocab(model));
  return j;
}

RefinementEdit edit_from_json(const json &j, const PrototypeModel &model) {
  if (!j.is_object())
    throw std::invalid_argument("edit must be a JSON object");
  RefinementEdit e;
  e.kind = parse_edit_kind(j.at("op").get<std::string>());
  if (j.contains("prototype_id") && !j.at("prototype_id").is_null()) {
    const auto &id = j.at("prototype_id");
    if (!id.is_number_integer() || id.get<long long>() < 0)
      throw std::invalid_argument("prototype_id must be a non-negative integer");
    e.prototype_id = id.get<std::size_t>();
  }
  if (j.contains("sequence") && !j.at("sequence").is_null()) {
    const EncoderConfig &ec = model.encoder.config();
    e.sequence = sequence_from_json(j.at("sequence"), ec.input_kind, ec.input_width,
                                    token_vocab(model));
  }
  return e;
}

void EditJournal::append(const RefinementEdit &edit, const PrototypeModel &model) const {
  std::ofstream out(path_, std::ios::app);
  if (!out)
    throw std::runtime_error("cannot open edit journal '" + path_ + "'");
  json j = edit_to_json(edit, model);
  j["time"] = utc_now();
  out << j.dump() << '\n';
}

std::vector<json> EditJournal::entries() const {
  std::vector<json> out;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty())
      out.push_back(json::parse(line));
  return out;
}

} // namespace protoseq
