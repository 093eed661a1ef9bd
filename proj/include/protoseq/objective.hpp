// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "protoseq/autodiff.hpp"
#include "protoseq/hyperparams.hpp"
#include "protoseq/model.hpp"

namespace protoseq {

/// Per-term values of the training loss. `total` is
/// ce + lambda_c * rc + lambda_e * re + lambda_d * rd + lambda_l1 * l1.
struct LossTerms {
  double ce = 0.0;
  double rc = 0.0; // clustering: sum over batch of min_i ||e - p_i||^2
  double re = 0.0; // evidence: sum over prototypes of min_batch ||p_i - e||^2
  double rd = 0.0; // diversity: sum_{i<j} max(0, d_min - ||p_i - p_j||)^2
  double l1 = 0.0; // sum |W|
  double total = 0.0;

  LossTerms &operator+=(const LossTerms &o);
  /// Name of the first non-finite term, or empty.
  std::string first_non_finite() const;
};

/// Cross-entropy for one example. Multiclass: -log y_hat[label]. Multilabel:
/// summed binary cross-entropy against the label set. Probabilities are
/// clamped to [1e-12, 1 - 1e-12] before taking logs (multiclass clamps the
/// lower end only, so a perfect prediction scores exactly 0).
double classification_loss(std::span<const double> scores, const std::vector<int> &labels,
                           TaskMode mode);

struct RegularizerValues {
  double rc = 0.0, re = 0.0, rd = 0.0, l1 = 0.0;
};

/// R_c, R_e, R_d and ||W||_1. R_c and R_e use `batch_embeddings` as the
/// candidate set.
RegularizerValues regularizers(const Tensor &prototypes,
                               const std::vector<std::vector<double>> &batch_embeddings,
                               const Tensor &weights, double d_min);

/// Differentiable loss over a mini-batch.
struct LossGraph {
  ad::Var total;
  ad::Var ce, rc, re, rd, l1;
  std::vector<ForwardGraph> examples;

  LossTerms values() const;
};

/// Multi-hot 0/1 target vector of length C.
Tensor label_targets(const std::vector<int> &labels, std::size_t num_classes);

/// Builds the full objective for `batch`. `prototypes` is the node standing
/// for P (see build_forward).
LossGraph build_loss(ad::Tape &tape, PrototypeModel &model, std::span<const Sequence *const> batch,
                     const Hyperparams &hp, ad::Var prototypes,
                     std::mt19937_64 *dropout_rng = nullptr);

/// Loss value of `batch` under the model, without dropout.
LossTerms total_loss(const PrototypeModel &model, std::span<const Sequence *const> batch,
                     const Hyperparams &hp);
LossTerms total_loss(const PrototypeModel &model, const std::vector<Sequence> &batch,
                     const Hyperparams &hp);

} // namespace protoseq
