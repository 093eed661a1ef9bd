// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "protoseq/checkpoint.hpp"
#include "protoseq/refinement.hpp"
#include "protoseq/synthetic.hpp"
#include "support.hpp"

using namespace protoseq;

namespace {

struct Trained {
  Dataset data;
  PrototypeModel model;
};

const Trained &trained() {
  static const Trained t = [] {
    MotifSpec spec;
    spec.vocab_size = 20;
    spec.train_fraction = 1.0;
    spec.val_fraction = 0.0;
    Dataset d = generate_synthetic(spec, 150).data;
    Hyperparams hp;
    hp.prototypes = 5;
    hp.hidden = 6;
    hp.embedding_dim = 6;
    hp.epochs = 4;
    PrototypeModel m = train(d, hp, 2).model;
    return Trained{std::move(d), std::move(m)};
  }();
  return t;
}

std::string snapshot(const PrototypeModel &m) { return checkpoint_to_json(m).dump(); }

RefinementEdit make_edit(EditKind kind, std::optional<std::size_t> id, std::optional<Sequence> seq) {
  RefinementEdit e;
  e.kind = kind;
  e.prototype_id = id;
  e.sequence = std::move(seq);
  return e;
}

} // namespace

TEST_CASE("delete removes a row and a weight column") {
  PrototypeModel m = trained().model;
  const PrototypeModel before = m;
  apply_edit(m, make_edit(EditKind::Delete, 2, std::nullopt));
  CHECK(m.k() == 4);
  CHECK(m.weights.value.cols == 4);
  CHECK(m.provenance.size() == 4);
  CHECK(m.provenance[2] == before.provenance[3]);
  for (std::size_t c = 0; c < m.num_classes; ++c)
    CHECK(m.weights.value(c, 2) == before.weights.value(c, 3));
  m.check_invariants();
}

TEST_CASE("create appends the encoding of the sequence with zero weights") {
  PrototypeModel m = trained().model;
  const Sequence s = trained().data.sequences[7];
  apply_edit(m, make_edit(EditKind::Create, std::nullopt, s));
  CHECK(m.k() == 6);
  const auto e = m.encoder.embed(s);
  for (std::size_t j = 0; j < e.size(); ++j)
    CHECK(std::abs(m.prototypes.value(5, j) - e[j]) <= 1e-12);
  for (std::size_t c = 0; c < m.num_classes; ++c)
    CHECK(m.weights.value(c, 5) == 0.0);
  CHECK(*m.provenance[5] == s);
  m.check_invariants();
}

TEST_CASE("revise replaces provenance and keeps the weight column") {
  PrototypeModel m = trained().model;
  const Tensor W = m.weights.value;
  const Sequence s = trained().data.sequences[3];
  apply_edit(m, make_edit(EditKind::Revise, 1, s));
  CHECK(*m.provenance[1] == s);
  CHECK(m.weights.value.data == W.data);
  m.check_invariants();
}

TEST_CASE("failed edits leave the model untouched") {
  PrototypeModel m = trained().model;
  const std::string before = snapshot(m);
  CHECK_THROWS_AS(apply_edit(m, make_edit(EditKind::Delete, 9, std::nullopt)), std::out_of_range);
  CHECK_THROWS_AS(apply_edit(m, make_edit(EditKind::Revise, 9, trained().data.sequences[0])),
                  std::out_of_range);
  CHECK_THROWS_AS(apply_edit(m, make_edit(EditKind::Delete, std::nullopt, std::nullopt)),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_edit(m, make_edit(EditKind::Create, std::nullopt, std::nullopt)),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_edit(m, make_edit(EditKind::Create, std::nullopt, Sequence::from_tokens({}))),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_edit(m, make_edit(EditKind::Create, std::nullopt, Sequence::from_tokens({9999}))),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      apply_edit(m, make_edit(EditKind::Create, std::nullopt,
                              Sequence::from_vectors(StepKind::Real, 2, {1.0, 2.0}))),
      std::invalid_argument);
  CHECK(snapshot(m) == before);

  PrototypeModel one = m;
  for (std::size_t i = 0; i < 4; ++i)
    apply_edit(one, make_edit(EditKind::Delete, 0, std::nullopt));
  const std::string last = snapshot(one);
  CHECK_THROWS_AS(apply_edit(one, make_edit(EditKind::Delete, 0, std::nullopt)),
                  std::invalid_argument);
  CHECK(snapshot(one) == last);
}

TEST_CASE("zero-epoch fine-tune only refreshes the prototypes") {
  PrototypeModel m = trained().model;
  PrototypeModel expected = m;
  m.prototypes.value.fill(0.25);
  const TrainState s = finetune(m, trained().data.sequences, m.hparams, 0, 1);
  CHECK(s.step == 0);
  CHECK(s.projection_log.empty());
  CHECK(snapshot(m) == snapshot(expected));
}

TEST_CASE("pinned fine-tuning keeps prototypes on their provenance") {
  PrototypeModel m = trained().model;
  apply_edit(m, make_edit(EditKind::Delete, 0, std::nullopt));
  apply_edit(m, make_edit(EditKind::Create, std::nullopt, trained().data.sequences[11]));
  double worst_gap = 0.0;
  std::size_t negative = 0;
  TrainOptions opts;
  opts.on_step = [&](const PrototypeModel &pm, const TrainState &) {
    worst_gap = std::max(worst_gap, pm.max_provenance_gap());
    for (double w : pm.weights.value.data)
      negative += w < 0.0;
  };
  const std::vector<std::optional<Sequence>> prov = m.provenance;
  const Encoder enc_before = m.encoder;
  const TrainState s = finetune(m, trained().data.sequences, m.hparams, 2, 5, opts);
  CHECK(s.epoch == 2);
  CHECK(s.step > 0);
  CHECK(s.projection_log.empty());
  CHECK_FALSE(s.final_projection);
  CHECK(worst_gap <= 1e-6);
  CHECK(negative == 0);
  CHECK(m.provenance == prov);
  CHECK_FALSE(m.encoder == enc_before); // the encoder itself trains
  m.check_invariants();
}

TEST_CASE("fine-tuning needs provenance for every prototype") {
  PrototypeModel m = trained().model;
  m.provenance[1].reset();
  CHECK_THROWS_AS(finetune(m, trained().data.sequences, m.hparams, 1, 1), std::invalid_argument);
}

TEST_CASE("edit JSON round trip and journal") {
  const PrototypeModel &m = trained().model;
  const RefinementEdit e = make_edit(EditKind::Revise, 3, trained().data.sequences[2]);
  const auto j = edit_to_json(e, m);
  CHECK(j.at("op") == "revise");
  CHECK(j.at("prototype_id") == 3);
  CHECK(j.at("sequence").contains("tokens"));
  const RefinementEdit back = edit_from_json(j, m);
  CHECK(back.kind == EditKind::Revise);
  CHECK(back.prototype_id == std::optional<std::size_t>(3));
  CHECK(back.sequence->tokens == e.sequence->tokens);

  CHECK_THROWS_AS(edit_from_json(nlohmann::json{{"op", "merge"}}, m), std::invalid_argument);
  CHECK_THROWS_AS(edit_from_json(nlohmann::json{{"op", "delete"}, {"prototype_id", -1}}, m),
                  std::invalid_argument);
  const auto text = edit_from_json(nlohmann::json{{"op", "create"}, {"sequence", {{"text", "t01 t02"}}}}, m);
  CHECK(text.sequence->length() == 2);

  protoseq::testing::TempDir dir("journal");
  EditJournal journal(dir.file("edits.jsonl"));
  journal.append(e, m);
  journal.append(make_edit(EditKind::Delete, 1, std::nullopt), m);
  const auto entries = journal.entries();
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].at("op") == "revise");
  CHECK(entries[1].at("op") == "delete");
  const std::string time = entries[1].at("time");
  CHECK(time.size() == 20);
  CHECK(time.back() == 'Z');
}
