// SPDX-License-Identifier: Apache-2.0
#include "protoseq/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "protoseq/kernels.hpp"

namespace protoseq {

std::string PrototypeModel::class_name(std::size_t c) const {
  if (c < class_names.size() && !class_names[c].empty())
    return class_names[c];
  return std::to_string(c + 1);
}

double PrototypeModel::max_provenance_gap() const {
  double worst = 0.0;
  const auto &k = kernels::active();
  for (std::size_t i = 0; i < provenance.size() && i < this->k(); ++i) {
    if (!provenance[i])
      continue;
    const auto e = encoder.embed(*provenance[i]);
    worst = std::max(worst, std::sqrt(k.squared_distance(e.data(), prototypes.value.row(i).data(),
                                                         e.size())));
  }
  return worst;
}

void PrototypeModel::check_invariants(double tol) const {
  const auto fail = [](const std::string &what) { throw std::logic_error("model invariant: " + what); };
  if (k() < 1)
    fail("at least one prototype is required");
  if (prototypes.value.cols != m())
    fail("prototype width " + std::to_string(prototypes.value.cols) + " != embedding size " +
         std::to_string(m()));
  if (weights.value.rows != num_classes || weights.value.cols != k())
    fail("weight matrix is " + weights.value.shape_string() + ", expected " +
         std::to_string(num_classes) + "x" + std::to_string(k()));
  if (provenance.size() != k())
    fail("provenance list has " + std::to_string(provenance.size()) + " entries for " +
         std::to_string(k()) + " prototypes");
  for (double w : weights.value.data)
    if (!(w >= 0.0))
      fail("negative or non-finite output weight");
  const double gap = max_provenance_gap();
  if (gap > tol)
    fail("prototype differs from its provenance encoding by " + std::to_string(gap));
}

std::vector<double> similarity(std::span<const double> embedding, const Tensor &prototypes) {
  if (embedding.size() != prototypes.cols)
    throw std::invalid_argument("similarity: embedding has " + std::to_string(embedding.size()) +
                                " dims, prototypes have " + std::to_string(prototypes.cols));
  const auto &k = kernels::active();
  std::vector<double> a(prototypes.rows);
  for (std::size_t i = 0; i < prototypes.rows; ++i)
    a[i] = std::exp(-k.squared_distance(embedding.data(), prototypes.row(i).data(),
                                        embedding.size()));
  return a;
}

ForwardGraph build_forward(ad::Tape &tape, PrototypeModel &model, const Sequence &seq,
                           ad::Var prototypes, std::mt19937_64 *dropout_rng) {
  ForwardGraph g;
  g.embedding = model.encoder.encode(tape, seq, dropout_rng);
  g.similarities = tape.gaussian_similarity(g.embedding, prototypes);
  g.logits = tape.matvec(tape.parameter(model.weights), g.similarities);
  g.scores = model.mode == TaskMode::Multiclass ? tape.softmax(g.logits) : tape.sigmoid(g.logits);
  return g;
}

ForwardResult forward(const PrototypeModel &model, const Sequence &seq) {
  ad::Tape tape;
  // Read-only use of the parameters; backward() is never called on this tape.
  auto &m = const_cast<PrototypeModel &>(model);
  const ForwardGraph g = build_forward(tape, m, seq, tape.parameter(m.prototypes));
  return ForwardResult{g.embedding.value().data, g.similarities.value().data,
                       g.logits.value().data, g.scores.value().data};
}

std::size_t predicted_class(const ForwardResult &r) {
  return static_cast<std::size_t>(
      std::distance(r.scores.begin(), std::max_element(r.scores.begin(), r.scores.end())));
}

PrototypeModel make_model(const Hyperparams &hp, StepKind input_kind, std::size_t vocab_size,
                          std::size_t input_width, TaskMode mode, std::size_t num_classes,
                          std::uint64_t seed) {
  hp.validate();
  if (num_classes < 1)
    throw std::invalid_argument("model needs at least one class");
  EncoderConfig ec;
  ec.cell = hp.cell;
  ec.bidirectional = hp.bidirectional;
  ec.layers = hp.layers;
  ec.hidden = hp.hidden;
  ec.input_kind = input_kind;
  ec.vocab_size = vocab_size;
  ec.input_width = input_width;
  ec.embedding_dim = hp.embedding_dim;
  ec.projection_dim = hp.projection_dim;
  ec.dropout = hp.dropout;

  PrototypeModel model;
  model.mode = mode;
  model.num_classes = num_classes;
  model.hparams = hp;
  model.encoder = Encoder(ec, seed);
  model.prototypes = ad::Parameter("prototypes", Tensor(hp.prototypes, model.encoder.embedding_size()));
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0 / static_cast<double>(hp.prototypes));
  Tensor w(num_classes, hp.prototypes);
  for (double &v : w.data)
    v = u(rng);
  model.weights = ad::Parameter("weights", std::move(w));
  model.provenance.assign(hp.prototypes, std::nullopt);
  return model;
}

} // namespace protoseq
