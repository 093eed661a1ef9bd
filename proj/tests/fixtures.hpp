// SPDX-License-Identifier: Apache-2.0
#pragma once

// Hand-built models with known outputs.

#include <cmath>

#include "protoseq/model.hpp"

namespace protoseq::testing {

inline const char *kReviewInput = "pizza is good but service is extremely slow";

inline const char *kReviewExplanation =
    "Input:       pizza is good but service is extremely slow\n"
    "Prediction:  Negative\n"
    "Explanation:   0.69 * good food but worst service (Negative 2.1)\n"
    "             + 0.30 * service is really slow (Negative 1.1)\n";

/// Two-prototype review classifier whose explanation of kReviewInput is
/// kReviewExplanation.
///
/// The LSTM has saturated input, forget and output gates (bias 40 rounds the
/// sigmoid to exactly 1) and no recurrent weights, so c_T is the sum of
/// tanh(x_t) over the steps and e = tanh(c_T). Only "good" (dims 0-2) and
/// "slow" (dim 3) have non-zero token vectors, chosen so that
///   ||r(input) - r("good food but worst service")||^2 = -ln 0.69
///   ||r(input) - r("service is really slow")||^2     = -ln 0.30.
/// Prototype rows are computed from their provenance, so the model passes
/// its invariant checks.
inline PrototypeModel review_model() {
  const std::vector<std::string> words = {"pizza", "is", "good", "but", "service", "extremely",
                                          "slow", "food", "worst", "really"};
  std::vector<std::string> ordered = {Vocabulary::kUnknownToken};
  ordered.insert(ordered.end(), words.begin(), words.end());

  Hyperparams hp;
  hp.prototypes = 2;
  hp.hidden = 4;
  hp.embedding_dim = 4;
  PrototypeModel m =
      make_model(hp, StepKind::Token, ordered.size(), 0, TaskMode::Multiclass, 2, 1);
  m.vocab = Vocabulary::from_tokens(ordered);
  m.class_names = {"Positive", "Negative"};

  const std::size_t h = 4;
  for (auto &p : m.encoder.parameters())
    p.value.fill(0.0);
  Tensor &table = m.encoder.find("embedding")->value;
  Tensor &W = m.encoder.find("l0.fwd.W")->value;
  Tensor &b = m.encoder.find("l0.fwd.b")->value;
  for (std::size_t r = 0; r < h; ++r) {
    b[r] = 40.0;         // input gate
    b[h + r] = 40.0;     // forget gate
    b[3 * h + r] = 40.0; // output gate
    W(2 * h + r, r) = 1.0; // candidate reads the token vector
  }
  const double good = std::atanh(std::atanh(std::sqrt(-std::log(0.30) / 3.0)));
  const double slow = std::atanh(std::atanh(std::sqrt(-std::log(0.69))));
  const auto good_id = static_cast<std::size_t>(m.vocab.id("good"));
  const auto slow_id = static_cast<std::size_t>(m.vocab.id("slow"));
  for (std::size_t j = 0; j < 3; ++j)
    table(good_id, j) = good;
  table(slow_id, 3) = slow;

  const auto encode = [&](const std::string &text) {
    return Sequence::from_tokens(m.vocab.encode(split_words(text)), {1});
  };
  m.provenance = {encode("good food but worst service"), encode("service is really slow")};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto e = m.encoder.embed(*m.provenance[i]);
    std::copy(e.begin(), e.end(), m.prototypes.value.row(i).begin());
  }
  m.weights.value = Tensor(2, 2);
  m.weights.value(1, 0) = 2.1;
  m.weights.value(1, 1) = 1.1;
  return m;
}

} // namespace protoseq::testing
