// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "protoseq/dataset.hpp"

namespace protoseq {

/// Planted-motif task: each sequence is noise tokens with its class's motif
/// inserted (in order, possibly gapped) at random positions.
struct MotifSpec {
  std::size_t num_classes = 4;
  std::size_t vocab_size = 50;     // distinct tokens, motif + noise
  std::size_t motif_length = 3;
  std::size_t min_length = 6;
  std::size_t max_length = 12;
  double insert_probability = 1.0;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  std::uint64_t seed = 1;
  /// Explicit motifs (token names), one per class. Drawn from the alphabet
  /// when empty.
  std::vector<std::vector<std::string>> motifs;

  void validate() const;
};

MotifSpec motif_spec_from_key_values(const std::map<std::string, std::string> &kv);
MotifSpec load_motif_spec(const std::string &path);

struct SyntheticData {
  Dataset data;
  std::vector<std::vector<std::string>> motifs; // per class
  std::vector<std::string> noise_alphabet;
  std::vector<bool> has_motif;                  // per sequence
  /// Occurrences of each motif token, per class, as written by the generator.
  std::vector<std::map<std::string, std::size_t>> motif_token_counts;
};

/// Token name used for alphabet entry `i` ("t00", "t01", ...).
std::string synthetic_token(std::size_t i);

/// Deterministic for a given spec (including its seed).
SyntheticData generate_synthetic(const MotifSpec &spec, std::size_t n_sequences);

/// True when `motif` occurs in `words` as an order-preserving subsequence.
bool contains_subsequence(const std::vector<std::string> &words,
                          const std::vector<std::string> &motif);

} // namespace protoseq
