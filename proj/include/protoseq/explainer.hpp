// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "protoseq/model.hpp"

namespace protoseq {

struct Contribution {
  std::size_t prototype = 0;
  double similarity = 0.0;     // a_i
  std::vector<double> weights; // W[:, i]
  std::optional<Sequence> provenance;
};

struct Explanation {
  Sequence input;
  ForwardResult result;
  std::vector<std::size_t> predicted;     // argmax, or every label with score >= 0.5 (multilabel)
  std::vector<Contribution> contributions; // a_i descending, ties to the lower id
};

/// The `top_n` most similar prototypes with a_i >= min_similarity.
Explanation explain(const PrototypeModel &model, const Sequence &seq, std::size_t top_n,
                    double min_similarity = 0.0);

/// z rebuilt from the listed contributions: sum of a_i * W[:, i].
std::vector<double> reconstruct_logits(const Explanation &e, std::size_t num_classes);

/// "Negative 2.1" style weight suffix: every class whose weight rounds to a
/// positive value at one decimal, heaviest first; the heaviest class alone
/// when none does.
std::string format_weights(const PrototypeModel &model, const std::vector<double> &column);

/// Text block:
///   Input:       <steps>
///   Prediction:  <label>
///   Explanation:   0.69 * <provenance> (<label> <w>)
///                + 0.30 * <provenance> (<label> <w>)
std::string render_explanation(const PrototypeModel &model, const Explanation &e);

/// Prototype i is effective when max(W[:, i]) >= tau * max(W).
std::vector<bool> effective_prototypes(const PrototypeModel &model, double tau = 0.1);

/// Drops prototype rows, W columns and provenance at `ids` (any order,
/// duplicates ignored). Throws if every prototype would go.
void remove_prototypes(PrototypeModel &model, std::vector<std::size_t> ids);

struct PruneResult {
  std::vector<std::size_t> removed; // ids in the original model
  std::vector<std::size_t> kept;
};

/// Removes every non-effective prototype. tau must lie in (0, 1).
PruneResult prune(PrototypeModel &model, double tau = 0.1);

struct Neighbor {
  std::size_t index = 0; // into the searched data
  double similarity = 0.0;
};

/// The n sequences most similar to prototype `id`, similarity descending,
/// ties to the lower index.
std::vector<Neighbor> neighbors(const PrototypeModel &model, std::size_t id,
                                const std::vector<Sequence> &data, std::size_t n);
std::vector<Neighbor> neighbors(const PrototypeModel &model, std::size_t id,
                                const std::vector<std::vector<double>> &embeddings, std::size_t n);

} // namespace protoseq
