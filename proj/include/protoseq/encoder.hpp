// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "protoseq/autodiff.hpp"
#include "protoseq/sequence.hpp"

namespace protoseq {

enum class CellKind : std::uint8_t { Lstm, Gru };

const char *cell_kind_name(CellKind kind);
CellKind parse_cell_kind(const std::string &name);

struct EncoderConfig {
  CellKind cell = CellKind::Lstm;
  bool bidirectional = false;
  std::size_t layers = 1;
  std::size_t hidden = 50;
  StepKind input_kind = StepKind::Token;
  std::size_t vocab_size = 1;    // token inputs, including the unknown row
  std::size_t input_width = 0;   // vector inputs
  std::size_t embedding_dim = 100;
  std::size_t projection_dim = 0; // optional linear map for vector inputs; 0 = none
  double dropout = 0.0;           // between stacked layers, training only

  bool operator==(const EncoderConfig &) const = default;
};

/// Recurrent sequence encoder. The embedding is the last hidden state of the
/// top layer; bidirectional encoders concatenate the forward state after the
/// last step with the backward state after the first step.
class Encoder {
public:
  Encoder() = default;
  /// Recurrent weights drawn from uniform(-1/sqrt(h), 1/sqrt(h)); the token
  /// embedding table from N(0, 1).
  Encoder(const EncoderConfig &config, std::uint64_t seed);

  const EncoderConfig &config() const { return config_; }
  /// Embedding width m: h, or 2h when bidirectional.
  std::size_t embedding_size() const {
    return config_.bidirectional ? 2 * config_.hidden : config_.hidden;
  }
  std::size_t step_input_size() const;

  std::vector<ad::Parameter> &parameters() { return params_; }
  const std::vector<ad::Parameter> &parameters() const { return params_; }
  ad::Parameter *find(const std::string &name);

  /// Input vector of step `t`. Token ids outside the table map to row 0.
  ad::Var embed_step(ad::Tape &tape, const Sequence &seq, std::size_t t);

  /// Differentiable embedding of `seq`. Dropout is applied only when
  /// `dropout_rng` is non-null.
  ad::Var encode(ad::Tape &tape, const Sequence &seq, std::mt19937_64 *dropout_rng = nullptr);

  /// Inference-only embedding.
  std::vector<double> embed(const Sequence &seq) const;

  /// Embeddings for many sequences, in input order.
  std::vector<std::vector<double>> embed_all(const std::vector<Sequence> &seqs) const;

  bool operator==(const Encoder &o) const;

private:
  struct CellParams {
    std::size_t w = 0, b = 0;   // LSTM: fused gate weights over [x; h]
    std::size_t wx = 0, wh = 0, bx = 0, bh = 0; // GRU
  };

  ad::Var run_direction(ad::Tape &tape, const std::vector<ad::Var> &xs, const CellParams &cell,
                        bool reverse, std::vector<ad::Var> *outputs);
  ad::Var lstm_step(ad::Tape &tape, const CellParams &cell, ad::Var x, ad::Var h, ad::Var &c);
  ad::Var gru_step(ad::Tape &tape, const CellParams &cell, ad::Var x, ad::Var h);
  std::size_t add_param(const std::string &name, std::size_t rows, std::size_t cols,
                        std::mt19937_64 &rng, double bound);

  EncoderConfig config_;
  std::vector<ad::Parameter> params_;
  std::size_t embedding_ = SIZE_MAX;
  std::size_t projection_ = SIZE_MAX;
  std::vector<CellParams> cells_; // layer-major, forward then backward
};

} // namespace protoseq
