// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "protoseq/encoder.hpp"

namespace protoseq {

/// Training configuration. Defaults: lambda_l1 = 1.0, lambda_e = 0.1,
/// lambda_c = 0.01, lambda_d = 0.01,
/// d_min = 1.0, beam width 3, projection every 4 epochs, SGD at learning
/// rate 1.0 decayed by 0.85 per epoch after epoch 10, gradient clipping at 5.
struct Hyperparams {
  std::size_t prototypes = 20;
  double lambda_c = 0.01;
  double lambda_e = 0.1;
  double lambda_d = 0.01;
  double lambda_l1 = 1.0;
  double d_min = 1.0;

  std::size_t beam_width = 3;
  double length_penalty = 0.0; // gamma: score = distance + gamma * length
  bool simplify = true;
  std::size_t projection_every = 4;

  double lr = 1.0;
  double lr_decay = 0.85;
  std::size_t lr_decay_after = 10; // epochs run at the initial rate
  double clip_norm = 5.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;

  CellKind cell = CellKind::Lstm;
  bool bidirectional = false;
  std::size_t layers = 1;
  std::size_t hidden = 50;
  std::size_t embedding_dim = 100;
  std::size_t projection_dim = 0;
  double dropout = 0.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Learning rate for a 1-indexed epoch.
  double learning_rate(std::size_t epoch) const;

  bool operator==(const Hyperparams &) const = default;
};

/// Flat `key = value` representation. Keys match the field names above.
std::map<std::string, std::string> to_key_values(const Hyperparams &hp);

/// Applies `kv` over the defaults. Unknown keys and unparsable values throw.
Hyperparams hyperparams_from_key_values(const std::map<std::string, std::string> &kv);

/// Parse `key = value` lines; `#` starts a comment. Duplicate keys and lines
/// without `=` throw with the offending line number.
std::map<std::string, std::string> parse_key_value_text(const std::string &text);
std::map<std::string, std::string> read_key_value_file(const std::string &path);
std::string format_key_values(const std::map<std::string, std::string> &kv);

Hyperparams load_hyperparams(const std::string &path);
void save_hyperparams(const Hyperparams &hp, const std::string &path);

} // namespace protoseq
