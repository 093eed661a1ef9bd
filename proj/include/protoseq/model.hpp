// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "protoseq/autodiff.hpp"
#include "protoseq/encoder.hpp"
#include "protoseq/hyperparams.hpp"
#include "protoseq/sequence.hpp"

namespace protoseq {

/// Encoder -> prototype similarity layer -> non-negative linear layer ->
/// softmax (multiclass) or sigmoid (multilabel).
struct PrototypeModel {
  TaskMode mode = TaskMode::Multiclass;
  std::size_t num_classes = 0;
  Encoder encoder;
  ad::Parameter prototypes{"prototypes", Tensor()}; // k x m
  ad::Parameter weights{"weights", Tensor()};       // C x k, every entry >= 0
  std::vector<std::optional<Sequence>> provenance;  // one per prototype
  Vocabulary vocab;
  std::vector<std::string> class_names;
  Hyperparams hparams;

  std::size_t k() const { return prototypes.value.rows; }
  std::size_t m() const { return encoder.embedding_size(); }

  std::string class_name(std::size_t c) const;

  /// Throws std::logic_error when a stored invariant does not hold: shapes,
  /// W >= 0, k >= 1, and ||P_i - r(provenance_i)|| <= tol for every prototype
  /// that has provenance.
  void check_invariants(double tol = 1e-6) const;

  /// Largest ||P_i - r(provenance_i)|| over prototypes with provenance.
  double max_provenance_gap() const;
};

/// Prototype layer: a_i = exp(-||e - p_i||^2).
std::vector<double> similarity(std::span<const double> embedding, const Tensor &prototypes);

struct ForwardResult {
  std::vector<double> embedding;
  std::vector<double> similarities; // a, length k
  std::vector<double> logits;       // z = W a, length C
  std::vector<double> scores;       // softmax or sigmoid of z
};

ForwardResult forward(const PrototypeModel &model, const Sequence &seq);

/// Nodes for one example on a tape.
struct ForwardGraph {
  ad::Var embedding;
  ad::Var similarities;
  ad::Var logits;
  ad::Var scores;
};

/// `prototypes` is the node holding P (the parameter itself during regular
/// training, or re-encoded provenance during pinned fine-tuning).
ForwardGraph build_forward(ad::Tape &tape, PrototypeModel &model, const Sequence &seq,
                           ad::Var prototypes, std::mt19937_64 *dropout_rng = nullptr);

/// Predicted class (argmax of scores, lowest index on ties).
std::size_t predicted_class(const ForwardResult &r);

/// Fresh model with random encoder weights, zero prototypes, and weights
/// drawn from uniform(0, 1/k). Prototype initialization happens in the
/// trainer.
PrototypeModel make_model(const Hyperparams &hp, StepKind input_kind, std::size_t vocab_size,
                          std::size_t input_width, TaskMode mode, std::size_t num_classes,
                          std::uint64_t seed);

} // namespace protoseq
