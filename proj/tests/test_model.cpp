// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "protoseq/explainer.hpp"
#include "protoseq/model.hpp"
#include "support.hpp"

using namespace protoseq;
using protoseq::testing::random_tokens;

namespace {

PrototypeModel small_model(std::size_t k, std::size_t classes, TaskMode mode, std::uint64_t seed) {
  Hyperparams hp;
  hp.prototypes = k;
  hp.hidden = 2;
  hp.embedding_dim = 3;
  return make_model(hp, StepKind::Token, 6, 0, mode, classes, seed);
}

} // namespace

TEST_CASE("similarity examples") {
  Tensor P(1, 2);
  const std::vector<double> origin = {0.0, 0.0};
  P(0, 0) = 1.0;
  CHECK(similarity(origin, P)[0] == doctest::Approx(0.36788).epsilon(1e-5));
  P(0, 0) = 2.0;
  CHECK(similarity(origin, P)[0] == doctest::Approx(0.01832).epsilon(1e-4));
  P(0, 0) = 0.0;
  CHECK(similarity(origin, P)[0] == 1.0);
  CHECK_THROWS_AS(similarity(std::vector<double>{1.0}, P), std::invalid_argument);
}

TEST_CASE("zero weights give uniform class scores") {
  PrototypeModel m = small_model(4, 3, TaskMode::Multiclass, 1);
  m.weights.value.fill(0.0);
  const auto r = forward(m, Sequence::from_tokens({1, 2}));
  for (double s : r.scores)
    CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("zero logits give one half in multilabel mode") {
  PrototypeModel m = small_model(4, 5, TaskMode::Multilabel, 1);
  m.weights.value.fill(0.0);
  const auto r = forward(m, Sequence::from_tokens({3}));
  for (double s : r.scores)
    CHECK(s == 0.5);
}

TEST_CASE("two-prototype model matches a hand computation") {
  PrototypeModel m = small_model(2, 2, TaskMode::Multiclass, 2);
  for (auto &p : m.encoder.parameters())
    p.value.fill(0.0); // e = 0 for every input
  m.prototypes.value = Tensor(2, 2);
  m.prototypes.value(0, 0) = 1.0;
  m.prototypes.value(1, 1) = 2.0;
  m.weights.value = Tensor(2, 2);
  m.weights.value(0, 0) = 2.0;
  m.weights.value(1, 0) = 0.5;
  m.weights.value(1, 1) = 1.0;

  const double a0 = std::exp(-1.0), a1 = std::exp(-4.0);
  const double z0 = 2.0 * a0, z1 = 0.5 * a0 + 1.0 * a1;
  const double y0 = 1.0 / (1.0 + std::exp(z1 - z0));

  const auto r = forward(m, Sequence::from_tokens({4}));
  CHECK(r.similarities[0] == doctest::Approx(a0).epsilon(1e-15));
  CHECK(r.similarities[1] == doctest::Approx(a1).epsilon(1e-15));
  CHECK(r.logits[0] == doctest::Approx(z0).epsilon(1e-15));
  CHECK(r.logits[1] == doctest::Approx(z1).epsilon(1e-15));
  CHECK(r.scores[0] == doctest::Approx(y0).epsilon(1e-14));
  CHECK(r.scores[1] == doctest::Approx(1.0 - y0).epsilon(1e-14));
  CHECK(predicted_class(r) == 0);
}

TEST_CASE("logits decompose over prototypes") {
  std::mt19937_64 rng(31);
  for (TaskMode mode : {TaskMode::Multiclass, TaskMode::Multilabel}) {
    PrototypeModel m = small_model(7, 4, mode, 5);
    m.prototypes.value = protoseq::testing::random_tensor(7, 2, rng);
    for (int trial = 0; trial < 30; ++trial) {
      const auto r = forward(m, random_tokens(1 + trial % 6, 6, rng));
      for (std::size_t c = 0; c < 4; ++c) {
        double z = 0.0;
        for (std::size_t i = 0; i < m.k(); ++i)
          z += r.similarities[i] * m.weights.value(c, i);
        CHECK(std::abs(z - r.logits[c]) <= 1e-12);
      }
      if (mode == TaskMode::Multiclass)
        CHECK(std::abs(std::accumulate(r.scores.begin(), r.scores.end(), 0.0) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("raising one similarity never lowers a logit") {
  std::mt19937_64 rng(37);
  PrototypeModel m = small_model(6, 3, TaskMode::Multiclass, 9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6);
    for (double &x : a)
      x = u(rng);
    const std::size_t i = trial % 6;
    std::vector<double> b = a;
    b[i] = std::min(1.0, b[i] + u(rng));
    for (std::size_t c = 0; c < 3; ++c) {
      double za = 0.0, zb = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        za += m.weights.value(c, j) * a[j];
        zb += m.weights.value(c, j) * b[j];
      }
      CHECK(zb >= za);
    }
  }
}

TEST_CASE("fresh models start with small non-negative weights") {
  PrototypeModel m = small_model(20, 4, TaskMode::Multiclass, 3);
  for (double w : m.weights.value.data) {
    CHECK(w >= 0.0);
    CHECK(w <= 1.0 / 20.0);
  }
  CHECK(m.k() == 20);
  CHECK(m.m() == 2);
  CHECK(m.provenance.size() == 20);
}

TEST_CASE("invariant checks catch broken models") {
  PrototypeModel m = small_model(2, 2, TaskMode::Multiclass, 4);
  m.check_invariants();
  m.weights.value(0, 0) = -0.1;
  CHECK_THROWS_AS(m.check_invariants(), std::logic_error);
  m.weights.value(0, 0) = 0.1;
  m.provenance[0] = Sequence::from_tokens({1, 2});
  CHECK_THROWS_AS(m.check_invariants(), std::logic_error); // P row is not r(provenance)
  const auto e = m.encoder.embed(*m.provenance[0]);
  std::copy(e.begin(), e.end(), m.prototypes.value.row(0).begin());
  m.check_invariants();
}
