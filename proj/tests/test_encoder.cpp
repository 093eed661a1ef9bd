// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "protoseq/encoder.hpp"
#include "support.hpp"

using namespace protoseq;
using protoseq::testing::finite_difference_check;
using protoseq::testing::random_tensor;
using protoseq::testing::random_tokens;

namespace {

EncoderConfig token_config(CellKind cell, bool bi, std::size_t layers, std::size_t hidden,
                           std::size_t vocab = 10, std::size_t dim = 4) {
  EncoderConfig c;
  c.cell = cell;
  c.bidirectional = bi;
  c.layers = layers;
  c.hidden = hidden;
  c.vocab_size = vocab;
  c.embedding_dim = dim;
  return c;
}

} // namespace

TEST_CASE("token steps read their embedding row") {
  Encoder enc(token_config(CellKind::Lstm, false, 1, 3), 1);
  const Tensor &table = enc.find("embedding")->value;
  ad::Tape tape;
  const Sequence s = Sequence::from_tokens({3, 42, -1});
  const ad::Var r3 = enc.embed_step(tape, s, 0);
  for (std::size_t j = 0; j < table.cols; ++j)
    CHECK(r3.value()[j] == table(3, j));
  // Out-of-table ids fall back to the unknown row.
  for (std::size_t t : {1u, 2u}) {
    const ad::Var r0 = enc.embed_step(tape, s, t);
    for (std::size_t j = 0; j < table.cols; ++j)
      CHECK(r0.value()[j] == table(0, j));
  }
}

TEST_CASE("multi-hot steps pass through unchanged") {
  EncoderConfig c;
  c.input_kind = StepKind::MultiHot;
  c.input_width = 8;
  c.hidden = 3;
  Encoder enc(c, 1);
  std::vector<double> v(8, 0.0);
  v[2] = v[5] = 1.0;
  const Sequence s = Sequence::from_vectors(StepKind::MultiHot, 8, v);
  ad::Tape tape;
  CHECK(enc.embed_step(tape, s, 0).value().data == std::vector<double>{0, 0, 1, 0, 0, 1, 0, 0});
}

TEST_CASE("all-zero LSTM parameters give a zero embedding") {
  for (bool bi : {false, true}) {
    Encoder enc(token_config(CellKind::Lstm, bi, 2, 5), 3);
    for (auto &p : enc.parameters())
      p.value.fill(0.0);
    const auto e = enc.embed(Sequence::from_tokens({1, 2, 3, 4}));
    for (double x : e)
      CHECK(x == 0.0);
  }
}

TEST_CASE("bidirectional encoders concatenate both directions") {
  EncoderConfig c = token_config(CellKind::Lstm, true, 1, 50, 10, 8);
  Encoder enc(c, 1);
  CHECK(enc.embedding_size() == 100);
  CHECK(enc.embed(Sequence::from_tokens({1, 2})).size() == 100);
}

TEST_CASE("token order changes the embedding") {
  for (CellKind cell : {CellKind::Lstm, CellKind::Gru}) {
    Encoder enc(token_config(cell, false, 1, 6), 9);
    const auto a = enc.embed(Sequence::from_tokens({1, 2, 3, 4}));
    const auto b = enc.embed(Sequence::from_tokens({4, 3, 2, 1}));
    CHECK(a != b);
  }
}

TEST_CASE("empty sequences and mismatched steps are errors") {
  Encoder enc(token_config(CellKind::Gru, false, 1, 3), 1);
  CHECK_THROWS_AS(enc.embed(Sequence::from_tokens({})), std::invalid_argument);
  CHECK_THROWS_AS(enc.embed(Sequence::from_vectors(StepKind::Real, 2, {1.0, 2.0})),
                  std::invalid_argument);
}

TEST_CASE("embedding width does not depend on length") {
  std::mt19937_64 rng(4);
  for (CellKind cell : {CellKind::Lstm, CellKind::Gru})
    for (bool bi : {false, true}) {
      Encoder enc(token_config(cell, bi, 2, 4), 2);
      for (std::size_t len : {1u, 2u, 5u, 17u, 40u})
        CHECK(enc.embed(random_tokens(len, 10, rng)).size() == enc.embedding_size());
    }
}

TEST_CASE("encoder gradients match central differences") {
  std::mt19937_64 rng(8);
  for (CellKind cell : {CellKind::Lstm, CellKind::Gru})
    for (bool bi : {false, true})
      for (std::size_t len : {1u, 2u, 7u}) {
        Encoder enc(token_config(cell, bi, 2, 3, 6, 3), rng());
        const Sequence s = random_tokens(len, 6, rng);
        const Tensor c = random_tensor(enc.embedding_size(), 1, rng);
        std::vector<ad::Parameter *> params;
        for (auto &p : enc.parameters())
          params.push_back(&p);
        const auto report = finite_difference_check(
            [&](ad::Tape &t) { return t.sum(t.mul(enc.encode(t, s), t.constant(c))); }, params);
        INFO(cell_kind_name(cell), bi ? " bi" : " uni", " length ", len, " worst at ",
             report.where);
        CHECK(report.worst < 1e-4);
      }
}

TEST_CASE("vector encoders with a projection match central differences") {
  std::mt19937_64 rng(12);
  EncoderConfig c;
  c.input_kind = StepKind::Real;
  c.input_width = 4;
  c.projection_dim = 3;
  c.hidden = 3;
  Encoder enc(c, 5);
  std::vector<double> v(4 * 3);
  for (double &x : v)
    x = std::uniform_real_distribution<double>(-1, 1)(rng);
  const Sequence s = Sequence::from_vectors(StepKind::Real, 4, v);
  std::vector<ad::Parameter *> params;
  for (auto &p : enc.parameters())
    params.push_back(&p);
  const auto report =
      finite_difference_check([&](ad::Tape &t) { return t.sum(enc.encode(t, s)); }, params);
  CHECK(report.worst < 1e-4);
}

TEST_CASE("encoding is deterministic and dropout needs a generator") {
  EncoderConfig c = token_config(CellKind::Lstm, false, 2, 8);
  c.dropout = 0.5;
  Encoder enc(c, 3);
  const Sequence s = Sequence::from_tokens({1, 5, 2, 7});
  const auto a = enc.embed(s);
  CHECK(enc.embed(s) == a);
  Encoder twin(c, 3);
  CHECK(twin == enc);
  CHECK(twin.embed(s) == a);

  std::mt19937_64 rng(1);
  ad::Tape tape;
  const auto dropped = enc.encode(tape, s, &rng).value().data;
  CHECK(dropped != a);
}
