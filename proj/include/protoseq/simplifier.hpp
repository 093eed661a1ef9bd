// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "protoseq/encoder.hpp"
#include "protoseq/sequence.hpp"

namespace protoseq {

struct PrototypeModel;

/// An order-preserving selection of steps from one source sequence.
struct BeamCandidate {
  std::size_t source = 0;
  std::vector<std::uint32_t> positions;
  Sequence steps;
  double distance = 0.0; // ||r(steps) - p||
  double score = 0.0;    // distance + gamma * length
};

/// Candidate order: lower score, then shorter, then lower source id, then
/// lexicographically smaller positions.
bool candidate_before(const BeamCandidate &a, const BeamCandidate &b);

/// Every sequence obtained by deleting exactly one step, duplicates merged,
/// in order of the deleted position. Length-1 input yields nothing.
std::vector<Sequence> remove_one_subsequences(const Sequence &seq);

struct SimplifyOptions {
  std::size_t beam_width = 3;
  double length_penalty = 0.0;
};

struct SimplifyResult {
  BeamCandidate best;
  std::vector<double> embedding;       // r(best.steps)
  std::vector<double> best_score_trace; // running optimum after each iteration
  std::size_t iterations = 0;
  std::size_t max_candidates_per_iteration = 0;
  std::size_t candidates_scored = 0;
};

/// Beam search over remove-one subsequences. Seeds with the `beam_width`
/// full sequences closest to `prototype`, expands every beam member by one
/// deletion per iteration and keeps the best `beam_width` children. Stops
/// when no child beats the worst current beam member or nothing is left to
/// delete. `embeddings[i]` must be r(data[i]).
SimplifyResult simplify_prototype(const Encoder &encoder, std::span<const double> prototype,
                                  const std::vector<Sequence> &data,
                                  const std::vector<std::vector<double>> &embeddings,
                                  const SimplifyOptions &options);

SimplifyResult simplify_prototype(const Encoder &encoder, std::span<const double> prototype,
                                  const std::vector<Sequence> &data,
                                  const SimplifyOptions &options);

/// Simplifies every prototype of `model` against `data`; each prototype row
/// becomes r(subsequence) and its provenance the subsequence.
std::vector<SimplifyResult> simplify_prototypes(PrototypeModel &model,
                                                const std::vector<Sequence> &data,
                                                const SimplifyOptions &options);

} // namespace protoseq
