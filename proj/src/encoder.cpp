// SPDX-License-Identifier: Apache-2.0
#include "protoseq/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace protoseq {

const char *cell_kind_name(CellKind kind) { return kind == CellKind::Lstm ? "lstm" : "gru"; }

CellKind parse_cell_kind(const std::string &name) {
  if (name == "lstm") return CellKind::Lstm;
  if (name == "gru") return CellKind::Gru;
  throw std::invalid_argument("unknown cell kind '" + name + "' (expected lstm or gru)");
}

std::size_t Encoder::add_param(const std::string &name, std::size_t rows, std::size_t cols,
                               std::mt19937_64 &rng, double bound) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t(rows, cols);
  for (double &v : t.data)
    v = u(rng);
  params_.emplace_back(name, std::move(t));
  return params_.size() - 1;
}

Encoder::Encoder(const EncoderConfig &config, std::uint64_t seed) : config_(config) {
  if (config_.hidden == 0 || config_.layers == 0)
    throw std::invalid_argument("encoder needs hidden > 0 and layers > 0");
  if (config_.dropout < 0.0 || config_.dropout >= 1.0)
    throw std::invalid_argument("dropout must be in [0, 1)");
  std::mt19937_64 rng(seed);
  const std::size_t h = config_.hidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));

  if (config_.input_kind == StepKind::Token) {
    if (config_.vocab_size == 0 || config_.embedding_dim == 0)
      throw std::invalid_argument("token encoder needs vocab_size and embedding_dim");
    // Token vectors start at unit scale; at recurrent-weight scale every
    // sequence encodes to nearly the same point and classes merge early.
    embedding_ = add_param("embedding", config_.vocab_size, config_.embedding_dim, rng, bound);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (double &v : params_[embedding_].value.data)
      v = unit(rng);
  } else {
    if (config_.input_width == 0)
      throw std::invalid_argument("vector encoder needs input_width");
    if (config_.projection_dim > 0)
      projection_ =
          add_param("input_projection", config_.projection_dim, config_.input_width, rng, bound);
  }

  std::size_t in = step_input_size();
  const std::size_t dirs = config_.bidirectional ? 2 : 1;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    for (std::size_t d = 0; d < dirs; ++d) {
      const std::string prefix = "l" + std::to_string(l) + (d == 0 ? ".fwd." : ".bwd.");
      CellParams cp;
      if (config_.cell == CellKind::Lstm) {
        cp.w = add_param(prefix + "W", 4 * h, in + h, rng, bound);
        cp.b = add_param(prefix + "b", 4 * h, 1, rng, bound);
      } else {
        cp.wx = add_param(prefix + "Wx", 3 * h, in, rng, bound);
        cp.wh = add_param(prefix + "Wh", 3 * h, h, rng, bound);
        cp.bx = add_param(prefix + "bx", 3 * h, 1, rng, bound);
        cp.bh = add_param(prefix + "bh", 3 * h, 1, rng, bound);
      }
      cells_.push_back(cp);
    }
    in = dirs * h;
  }
}

std::size_t Encoder::step_input_size() const {
  if (config_.input_kind == StepKind::Token)
    return config_.embedding_dim;
  return config_.projection_dim > 0 ? config_.projection_dim : config_.input_width;
}

ad::Parameter *Encoder::find(const std::string &name) {
  for (auto &p : params_)
    if (p.name == name)
      return &p;
  return nullptr;
}

ad::Var Encoder::embed_step(ad::Tape &tape, const Sequence &seq, std::size_t t) {
  if (seq.kind != config_.input_kind)
    throw std::invalid_argument(std::string("sequence has ") + step_kind_name(seq.kind) +
                                " steps, encoder expects " + step_kind_name(config_.input_kind));
  if (t >= seq.length())
    throw std::out_of_range("step index out of range");
  if (seq.kind == StepKind::Token) {
    const ad::Var table = tape.parameter(params_[embedding_]);
    std::int32_t id = seq.tokens[t];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size)
      id = Vocabulary::kUnknown;
    return tape.gather_row(table, static_cast<std::size_t>(id));
  }
  if (seq.width != config_.input_width)
    throw std::invalid_argument("step width " + std::to_string(seq.width) + ", encoder expects " +
                                std::to_string(config_.input_width));
  Tensor x(seq.width, 1);
  std::copy_n(seq.values.begin() + static_cast<std::ptrdiff_t>(t * seq.width), seq.width,
              x.data.begin());
  ad::Var v = tape.constant(std::move(x));
  if (projection_ != SIZE_MAX)
    v = tape.matvec(tape.parameter(params_[projection_]), v);
  return v;
}

ad::Var Encoder::lstm_step(ad::Tape &tape, const CellParams &cell, ad::Var x, ad::Var h,
                           ad::Var &c) {
  const std::size_t n = config_.hidden;
  const ad::Var pre = tape.add(
      tape.matvec(tape.parameter(params_[cell.w]), tape.concat({x, h})),
      tape.parameter(params_[cell.b]));
  const ad::Var i = tape.sigmoid(tape.slice(pre, 0, n));
  const ad::Var f = tape.sigmoid(tape.slice(pre, n, n));
  const ad::Var g = tape.tanh(tape.slice(pre, 2 * n, n));
  const ad::Var o = tape.sigmoid(tape.slice(pre, 3 * n, n));
  c = f * c + i * g;
  return o * tape.tanh(c);
}

ad::Var Encoder::gru_step(ad::Tape &tape, const CellParams &cell, ad::Var x, ad::Var h) {
  const std::size_t n = config_.hidden;
  const ad::Var gx =
      tape.add(tape.matvec(tape.parameter(params_[cell.wx]), x), tape.parameter(params_[cell.bx]));
  const ad::Var gh =
      tape.add(tape.matvec(tape.parameter(params_[cell.wh]), h), tape.parameter(params_[cell.bh]));
  const ad::Var r = tape.sigmoid(tape.slice(gx, 0, n) + tape.slice(gh, 0, n));
  const ad::Var z = tape.sigmoid(tape.slice(gx, n, n) + tape.slice(gh, n, n));
  const ad::Var cand = tape.tanh(tape.slice(gx, 2 * n, n) + r * tape.slice(gh, 2 * n, n));
  // (1 - z) * cand + z * h
  return cand + z * (h - cand);
}

ad::Var Encoder::run_direction(ad::Tape &tape, const std::vector<ad::Var> &xs,
                               const CellParams &cell, bool reverse,
                               std::vector<ad::Var> *outputs) {
  const std::size_t n = config_.hidden;
  ad::Var h = tape.constant(Tensor(n, 1));
  ad::Var c = h;
  const std::size_t len = xs.size();
  if (outputs)
    outputs->assign(len, h);
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t t = reverse ? len - 1 - k : k;
    h = config_.cell == CellKind::Lstm ? lstm_step(tape, cell, xs[t], h, c)
                                       : gru_step(tape, cell, xs[t], h);
    if (outputs)
      (*outputs)[t] = h;
  }
  return h;
}

ad::Var Encoder::encode(ad::Tape &tape, const Sequence &seq, std::mt19937_64 *dropout_rng) {
  const std::size_t len = seq.length();
  if (len == 0)
    throw std::invalid_argument("cannot encode an empty sequence");
  std::vector<ad::Var> xs;
  xs.reserve(len);
  for (std::size_t t = 0; t < len; ++t)
    xs.push_back(embed_step(tape, seq, t));

  const std::size_t dirs = config_.bidirectional ? 2 : 1;
  for (std::size_t l = 0;; ++l) {
    const bool last = l + 1 == config_.layers;
    std::vector<ad::Var> fwd, bwd;
    const ad::Var hf = run_direction(tape, xs, cells_[l * dirs], false, last ? nullptr : &fwd);
    ad::Var hb{};
    if (dirs == 2)
      hb = run_direction(tape, xs, cells_[l * dirs + 1], true, last ? nullptr : &bwd);
    if (last)
      return dirs == 2 ? tape.concat({hf, hb}) : hf;

    for (std::size_t t = 0; t < len; ++t) {
      ad::Var next = dirs == 2 ? tape.concat({fwd[t], bwd[t]}) : fwd[t];
      if (dropout_rng && config_.dropout > 0.0) {
        std::bernoulli_distribution keep(1.0 - config_.dropout);
        Tensor mask(next.rows(), 1);
        for (double &m : mask.data)
          m = keep(*dropout_rng) ? 1.0 / (1.0 - config_.dropout) : 0.0;
        next = next * tape.constant(std::move(mask));
      }
      xs[t] = next;
    }
  }
}

std::vector<double> Encoder::embed(const Sequence &seq) const {
  ad::Tape tape;
  // The tape only reads parameter values here; no backward pass is run.
  auto &self = const_cast<Encoder &>(*this);
  return self.encode(tape, seq).value().data;
}

std::vector<std::vector<double>> Encoder::embed_all(const std::vector<Sequence> &seqs) const {
  std::vector<std::vector<double>> out;
  out.reserve(seqs.size());
  for (const auto &s : seqs)
    out.push_back(embed(s));
  return out;
}

bool Encoder::operator==(const Encoder &o) const {
  if (!(config_ == o.config_) || params_.size() != o.params_.size())
    return false;
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name != o.params_[i].name || params_[i].value.data != o.params_[i].value.data)
      return false;
  return true;
}

} // namespace protoseq
