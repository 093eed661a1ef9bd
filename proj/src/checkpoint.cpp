// SPDX-License-Identifier: Apache-2.0
#include "protoseq/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "protoseq/json_io.hpp"

namespace protoseq {

using nlohmann::json;

namespace {

const Vocabulary *token_vocab(const PrototypeModel &model) {
  return model.encoder.config().input_kind == StepKind::Token ? &model.vocab : nullptr;
}

void assign_tensor(ad::Parameter &p, const json &tensors) {
  if (!tensors.contains(p.name))
    throw std::runtime_error("checkpoint is missing tensor '" + p.name + "'");
  Tensor t = tensor_from_json(tensors.at(p.name));
  if (!t.same_shape(p.value))
    throw std::runtime_error("checkpoint tensor '" + p.name + "' is " + t.shape_string() +
                             ", expected " + p.value.shape_string());
  p.value = std::move(t);
  p.grad = Tensor();
}

} // namespace

json checkpoint_to_json(const PrototypeModel &model) {
  const EncoderConfig &ec = model.encoder.config();
  json enc = {{"cell", cell_kind_name(ec.cell)},
              {"bidirectional", ec.bidirectional},
              {"layers", ec.layers},
              {"hidden", ec.hidden},
              {"input_kind", step_kind_name(ec.input_kind)},
              {"vocab_size", ec.vocab_size},
              {"input_width", ec.input_width},
              {"embedding_dim", ec.embedding_dim},
              {"projection_dim", ec.projection_dim},
              {"dropout", ec.dropout}};
  json tensors = json::object();
  for (const auto &p : model.encoder.parameters())
    tensors[p.name] = tensor_to_json(p.value);
  json prov = json::array();
  for (const auto &s : model.provenance) {
    if (!s) {
      prov.push_back(nullptr);
      continue;
    }
    json js = sequence_to_json(*s, token_vocab(model));
    std::vector<int> labels;
    for (int c : s->labels)
      labels.push_back(c + 1);
    js["labels"] = labels;
    prov.push_back(std::move(js));
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"mode", task_mode_name(model.mode)},
          {"num_classes", model.num_classes},
          {"class_names", model.class_names},
          {"vocab", model.vocab.tokens()},
          {"hparams", to_key_values(model.hparams)},
          {"encoder", std::move(enc)},
          {"tensors", std::move(tensors)},
          {"prototypes", tensor_to_json(model.prototypes.value)},
          {"weights", tensor_to_json(model.weights.value)},
          {"provenance", std::move(prov)}};
}

PrototypeModel checkpoint_from_json(const json &j) {
  try {
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
      throw std::runtime_error("not a protoseq checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    const json &enc = j.at("encoder");
    EncoderConfig ec;
    ec.cell = parse_cell_kind(enc.at("cell").get<std::string>());
    ec.bidirectional = enc.at("bidirectional").get<bool>();
    ec.layers = enc.at("layers").get<std::size_t>();
    ec.hidden = enc.at("hidden").get<std::size_t>();
    ec.input_kind = parse_step_kind(enc.at("input_kind").get<std::string>());
    ec.vocab_size = enc.at("vocab_size").get<std::size_t>();
    ec.input_width = enc.at("input_width").get<std::size_t>();
    ec.embedding_dim = enc.at("embedding_dim").get<std::size_t>();
    ec.projection_dim = enc.at("projection_dim").get<std::size_t>();
    ec.dropout = enc.at("dropout").get<double>();

    PrototypeModel model;
    model.mode = parse_task_mode(j.at("mode").get<std::string>());
    model.num_classes = j.at("num_classes").get<std::size_t>();
    model.class_names = j.at("class_names").get<std::vector<std::string>>();
    model.vocab = Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());
    model.hparams =
        hyperparams_from_key_values(j.at("hparams").get<std::map<std::string, std::string>>());
    model.encoder = Encoder(ec, 0);
    const json &tensors = j.at("tensors");
    for (auto &p : model.encoder.parameters())
      assign_tensor(p, tensors);
    if (tensors.size() != model.encoder.parameters().size())
      throw std::runtime_error("checkpoint has unexpected encoder tensors");

    model.prototypes = ad::Parameter("prototypes", tensor_from_json(j.at("prototypes")));
    model.weights = ad::Parameter("weights", tensor_from_json(j.at("weights")));
    const Vocabulary *vocab = ec.input_kind == StepKind::Token ? &model.vocab : nullptr;
    for (const json &s : j.at("provenance")) {
      if (s.is_null()) {
        model.provenance.emplace_back();
        continue;
      }
      Sequence seq = sequence_from_json(s, ec.input_kind, ec.input_width, vocab);
      for (long c : s.value("labels", std::vector<long>{}))
        seq.labels.push_back(static_cast<int>(c - 1));
      model.provenance.emplace_back(std::move(seq));
    }
    if (model.prototypes.value.cols != model.m() || model.weights.value.rows != model.num_classes ||
        model.weights.value.cols != model.k() || model.provenance.size() != model.k())
      throw std::runtime_error("checkpoint shapes are inconsistent");
    return model;
  } catch (const json::exception &e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument &e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_file_atomic(const std::string &path, const std::string &text) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write '" + tmp + "'");
    out << text;
    out.flush();
    if (!out)
      throw std::runtime_error("short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move checkpoint into '" + path + "': " + ec.message());
  }
}

void save_checkpoint(const PrototypeModel &model, const std::string &path) {
  model.check_invariants();
  write_file_atomic(path, checkpoint_to_json(model).dump());
}

PrototypeModel load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error &e) {
    throw std::runtime_error("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

} // namespace protoseq
