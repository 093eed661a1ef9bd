// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "protoseq/objective.hpp"
#include "support.hpp"

using namespace protoseq;
using protoseq::testing::finite_difference_check;
using protoseq::testing::random_tensor;
using protoseq::testing::random_tokens;

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Direct loops over the definitions.
RegularizerValues oracle(const Tensor &P, const std::vector<std::vector<double>> &E,
                         const Tensor &W, double d_min) {
  RegularizerValues r;
  for (const auto &e : E) {
    double best = INFINITY;
    for (std::size_t i = 0; i < P.rows; ++i)
      best = std::min(best, sq_dist(e, P.row(i)));
    r.rc += best;
  }
  for (std::size_t i = 0; i < P.rows; ++i) {
    double best = INFINITY;
    for (const auto &e : E)
      best = std::min(best, sq_dist(e, P.row(i)));
    r.re += best;
  }
  for (std::size_t i = 0; i < P.rows; ++i)
    for (std::size_t j = i + 1; j < P.rows; ++j) {
      const double h = std::max(0.0, d_min - std::sqrt(sq_dist(P.row(i), P.row(j))));
      r.rd += h * h;
    }
  for (double w : W.data)
    r.l1 += std::abs(w);
  return r;
}

std::vector<std::vector<double>> random_rows(std::size_t n, std::size_t m, std::mt19937_64 &rng) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(random_tensor(1, m, rng).data);
  return out;
}

PrototypeModel tiny_model(std::uint64_t seed, std::size_t k = 2, std::size_t hidden = 3) {
  Hyperparams hp;
  hp.prototypes = k;
  hp.hidden = hidden;
  hp.embedding_dim = 3;
  PrototypeModel m = make_model(hp, StepKind::Token, 6, 0, TaskMode::Multiclass, 2, seed);
  std::mt19937_64 rng(seed + 100);
  m.prototypes.value = random_tensor(k, hidden, rng, -0.5, 0.5);
  return m;
}

} // namespace

TEST_CASE("classification loss examples") {
  CHECK(classification_loss(std::vector<double>{0, 1, 0}, {1}, TaskMode::Multiclass) == 0.0);
  CHECK(classification_loss(std::vector<double>{0.5, 0.5}, {0}, TaskMode::Multiclass) ==
        doctest::Approx(0.69315).epsilon(1e-5));
  CHECK(classification_loss(std::vector<double>{0.5, 0.5}, {0}, TaskMode::Multilabel) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(classification_loss(std::vector<double>{0.5, 0.5}, {0}, TaskMode::Multilabel) ==
        doctest::Approx(1.38629).epsilon(1e-5));
  // Exact 0 and 1 are clamped before the log.
  const double hard = classification_loss(std::vector<double>{1.0, 0.0}, {1}, TaskMode::Multiclass);
  CHECK(hard == doctest::Approx(-std::log(1e-12)));
  CHECK(std::isfinite(classification_loss(std::vector<double>{1.0, 0.0}, {1}, TaskMode::Multilabel)));
  CHECK_THROWS(classification_loss(std::vector<double>{0.5, 0.5}, {2}, TaskMode::Multiclass));
}

TEST_CASE("diversity penalty examples") {
  const Tensor W(1, 2, 0.0);
  Tensor P(2, 2, 0.3);
  const std::vector<std::vector<double>> batch = {{0.0, 0.0}};
  CHECK(regularizers(P, batch, W, 1.0).rd == 1.0);
  P(1, 0) = 1.3; // distance exactly 1
  CHECK(regularizers(P, batch, W, 1.0).rd == 0.0);
  P(1, 0) = 5.0;
  CHECK(regularizers(P, batch, W, 1.0).rd == 0.0);
}

TEST_CASE("an embedding on a prototype adds nothing to clustering or evidence") {
  Tensor P(1, 3);
  P(0, 0) = 0.25;
  P(0, 2) = -1.0;
  const auto r = regularizers(P, {{0.25, 0.0, -1.0}}, Tensor(1, 1), 1.0);
  CHECK(r.rc == 0.0);
  CHECK(r.re == 0.0);
}

TEST_CASE("regularizers match a double-loop evaluation") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor P = random_tensor(3, 4, rng);
    const auto E = random_rows(4, 4, rng);
    const Tensor W = random_tensor(2, 3, rng, 0.0, 1.0);
    const double d_min = trial % 2 ? 1.0 : 2.5;
    const auto got = regularizers(P, E, W, d_min);
    const auto want = oracle(P, E, W, d_min);
    CHECK(got.rc == doctest::Approx(want.rc).epsilon(1e-13));
    CHECK(got.re == doctest::Approx(want.re).epsilon(1e-13));
    CHECK(got.rd == doctest::Approx(want.rd).epsilon(1e-13));
    CHECK(got.l1 == doctest::Approx(want.l1).epsilon(1e-13));
  }
}

TEST_CASE("diversity does not depend on prototype order") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor P = random_tensor(5, 3, rng, -0.6, 0.6);
    Tensor Q(5, 3);
    const std::size_t perm[5] = {3, 0, 4, 1, 2};
    for (std::size_t i = 0; i < 5; ++i)
      std::copy(P.row(perm[i]).begin(), P.row(perm[i]).end(), Q.row(i).begin());
    const auto E = random_rows(3, 3, rng);
    CHECK(regularizers(P, E, Tensor(1, 1), 1.0).rd ==
          doctest::Approx(regularizers(Q, E, Tensor(1, 1), 1.0).rd).epsilon(1e-14));
  }
}

TEST_CASE("evidence over a superset never exceeds the batch estimate") {
  std::mt19937_64 rng(47);
  const Tensor P = random_tensor(4, 3, rng);
  const auto all = random_rows(40, 3, rng);
  for (std::size_t start = 0; start + 8 <= all.size(); start += 8) {
    const std::vector<std::vector<double>> batch(all.begin() + static_cast<std::ptrdiff_t>(start),
                                                 all.begin() + static_cast<std::ptrdiff_t>(start + 8));
    for (std::size_t i = 0; i < P.rows; ++i) {
      Tensor row(1, 3);
      std::copy(P.row(i).begin(), P.row(i).end(), row.data.begin());
      CHECK(regularizers(row, all, Tensor(1, 1), 1.0).re <=
            regularizers(row, batch, Tensor(1, 1), 1.0).re);
    }
  }
}

TEST_CASE("loss with every weight at zero is the cross-entropy") {
  PrototypeModel m = tiny_model(3);
  Hyperparams hp = m.hparams;
  hp.lambda_c = hp.lambda_e = hp.lambda_d = hp.lambda_l1 = 0.0;
  const std::vector<Sequence> batch = {Sequence::from_tokens({1, 2}, {0}),
                                       Sequence::from_tokens({3}, {1})};
  const LossTerms t = total_loss(m, batch, hp);
  CHECK(t.total == t.ce);

  hp.lambda_l1 = 1.0;
  double s = 0.0;
  for (double w : m.weights.value.data)
    s += std::abs(w);
  const LossTerms t2 = total_loss(m, batch, hp);
  CHECK(t2.total == doctest::Approx(t2.ce + s).epsilon(1e-15));
}

TEST_CASE("full loss equals independently computed components") {
  PrototypeModel m = tiny_model(5);
  const Hyperparams hp = m.hparams;
  const std::vector<Sequence> batch = {Sequence::from_tokens({1, 4, 2}, {0}),
                                       Sequence::from_tokens({5, 3}, {1})};
  double ce = 0.0;
  std::vector<std::vector<double>> E;
  for (const auto &s : batch) {
    const auto r = forward(m, s);
    ce += classification_loss(r.scores, s.labels, m.mode);
    E.push_back(r.embedding);
  }
  const auto reg = oracle(m.prototypes.value, E, m.weights.value, hp.d_min);
  const double want = ce + hp.lambda_c * reg.rc + hp.lambda_e * reg.re + hp.lambda_d * reg.rd +
                      hp.lambda_l1 * reg.l1;
  const LossTerms t = total_loss(m, batch, hp);
  CHECK(t.ce == doctest::Approx(ce).epsilon(1e-13));
  CHECK(t.rc == doctest::Approx(reg.rc).epsilon(1e-13));
  CHECK(t.re == doctest::Approx(reg.re).epsilon(1e-13));
  CHECK(t.rd == doctest::Approx(reg.rd).epsilon(1e-13));
  CHECK(t.l1 == doctest::Approx(reg.l1).epsilon(1e-13));
  CHECK(t.total == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("loss gradients match central differences on a tiny model") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    PrototypeModel m = tiny_model(seed);
    const Hyperparams hp = m.hparams;
    std::mt19937_64 rng(seed);
    const std::vector<Sequence> batch = {Sequence::from_tokens(random_tokens(3, 6, rng).tokens, {0}),
                                         Sequence::from_tokens(random_tokens(2, 6, rng).tokens, {1})};
    std::vector<const Sequence *> ptrs = {&batch[0], &batch[1]};
    const auto report = finite_difference_check(
        [&](ad::Tape &t) {
          return build_loss(t, m, ptrs, hp, t.parameter(m.prototypes)).total;
        },
        protoseq::testing::all_parameters(m));
    INFO("seed ", seed, " worst at ", report.where);
    CHECK(report.worst < 1e-4);
  }
}

TEST_CASE("multilabel loss uses binary cross-entropy per class") {
  Hyperparams hp;
  hp.prototypes = 3;
  hp.hidden = 3;
  hp.embedding_dim = 3;
  hp.lambda_c = hp.lambda_e = hp.lambda_d = hp.lambda_l1 = 0.0;
  PrototypeModel m = make_model(hp, StepKind::Token, 6, 0, TaskMode::Multilabel, 4, 2);
  const Sequence s = Sequence::from_tokens({1, 2}, {0, 3});
  const auto r = forward(m, s);
  const std::vector<Sequence> batch = {s};
  CHECK(total_loss(m, batch, hp).ce ==
        doctest::Approx(classification_loss(r.scores, s.labels, TaskMode::Multilabel)).epsilon(1e-14));
}
