// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "protoseq/dataset.hpp"
#include "protoseq/hyperparams.hpp"
#include "protoseq/model.hpp"
#include "protoseq/objective.hpp"

namespace protoseq {

/// Raised when a loss term or gradient goes non-finite.
class TrainingError : public std::runtime_error {
public:
  TrainingError(std::string term, std::size_t epoch, std::size_t step)
      : std::runtime_error("non-finite " + term + " at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step)),
        term_(std::move(term)) {}
  const std::string &term() const { return term_; }

private:
  std::string term_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  std::size_t steps = 0;
  LossTerms loss; // summed over the epoch's batches, before each update
  std::optional<double> val_accuracy;
  bool projected = false;
};

struct TrainState {
  std::size_t epoch = 0; // last completed epoch (1-based)
  std::size_t step = 0;  // optimizer steps taken
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> history;
  std::vector<std::size_t> projection_log; // epochs at which the cadence projection ran
  bool final_projection = false;           // an extra end-of-training pass ran
  std::size_t weight_violations = 0;       // W entries < 0 seen after a step
  double max_grad_norm = 0.0;              // largest pre-clip norm
  double max_clipped_norm = 0.0;           // largest post-clip norm
};

struct TrainOptions {
  const Dataset *validation = nullptr;
  /// Called after every optimizer step (after the W clamp).
  std::function<void(const PrototypeModel &, const TrainState &)> on_step;
  std::function<void(const EpochRecord &)> on_epoch;
};

struct TrainResult {
  PrototypeModel model;
  TrainState state;
};

/// Trains a fresh model on every sequence of `train_data`.
TrainResult train(const Dataset &train_data, const Hyperparams &hp, std::uint64_t seed,
                  const TrainOptions &options = {});

/// Sets P[i] to the embeddings of k distinct randomly chosen sequences.
void initialize_prototypes(PrototypeModel &model, const std::vector<Sequence> &data,
                           std::uint64_t seed);

/// Moves every prototype onto its nearest sequence embedding (ties to the
/// lowest index) and records that sequence as provenance. Returns the chosen
/// indices.
std::vector<std::size_t> project_prototypes(PrototypeModel &model,
                                            const std::vector<Sequence> &data);
std::vector<std::size_t> project_prototypes(PrototypeModel &model,
                                            const std::vector<Sequence> &data,
                                            const std::vector<std::vector<double>> &embeddings);

/// Global L2 norm of the gradients of `params`.
double gradient_norm(const std::vector<ad::Parameter *> &params);

/// Rescales all gradients by clip/norm when the global norm exceeds `clip`.
/// Returns the norm before clipping.
double clip_gradients(const std::vector<ad::Parameter *> &params, double clip);

enum class PrototypeMode : std::uint8_t {
  Free,  // P is a parameter, projected at the cadence
  Pinned // P = r(provenance) at every step, never projected
};

/// Runs `epochs` epochs of SGD on an existing model, continuing `state`.
/// Free mode projects (or simplifies) at the cadence and once at the end;
/// pinned mode requires provenance for every prototype.
void run_epochs(PrototypeModel &model, const std::vector<Sequence> &data, const Hyperparams &hp,
                std::size_t epochs, PrototypeMode mode, TrainState &state,
                const TrainOptions &options = {});

/// Sets P[i] = r(provenance[i]) for every prototype; throws if one is missing.
void refresh_pinned_prototypes(PrototypeModel &model);

/// Argmax accuracy on a multiclass set, or Recall@5 on a multilabel set.
double quick_score(const PrototypeModel &model, const std::vector<Sequence> &data);

} // namespace protoseq
