// SPDX-License-Identifier: Apache-2.0
#include "protoseq/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace protoseq {

LossTerms &LossTerms::operator+=(const LossTerms &o) {
  ce += o.ce;
  rc += o.rc;
  re += o.re;
  rd += o.rd;
  l1 += o.l1;
  total += o.total;
  return *this;
}

std::string LossTerms::first_non_finite() const {
  if (!std::isfinite(ce)) return "ce";
  if (!std::isfinite(rc)) return "rc";
  if (!std::isfinite(re)) return "re";
  if (!std::isfinite(rd)) return "rd";
  if (!std::isfinite(l1)) return "l1";
  if (!std::isfinite(total)) return "total";
  return {};
}

Tensor label_targets(const std::vector<int> &labels, std::size_t num_classes) {
  Tensor t(num_classes, 1);
  for (int c : labels) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes)
      throw std::out_of_range("label " + std::to_string(c) + " outside " +
                              std::to_string(num_classes) + " classes");
    t[static_cast<std::size_t>(c)] = 1.0;
  }
  return t;
}

double classification_loss(std::span<const double> scores, const std::vector<int> &labels,
                           TaskMode mode) {
  if (mode == TaskMode::Multiclass) {
    if (labels.size() != 1)
      throw std::invalid_argument("multiclass example needs exactly one label");
    const auto y = static_cast<std::size_t>(labels[0]);
    if (labels[0] < 0 || y >= scores.size())
      throw std::out_of_range("label outside score vector");
    return -std::log(std::max(scores[y], ad::Tape::kProbFloor));
  }
  const Tensor t = label_targets(labels, scores.size());
  double s = 0.0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    const double q = std::clamp(scores[c], ad::Tape::kProbFloor, 1.0 - ad::Tape::kProbFloor);
    s -= t[c] * std::log(q) + (1.0 - t[c]) * std::log(1.0 - q);
  }
  return s;
}

namespace {

struct RegularizerGraph {
  ad::Var rc, re, rd, l1;
};

RegularizerGraph build_regularizers(ad::Tape &tape, ad::Var prototypes, ad::Var batch,
                                    ad::Var weights, double d_min) {
  RegularizerGraph g;
  const ad::Var d_batch = tape.pairwise_sq_dist(batch, prototypes); // B x k
  g.rc = tape.sum(tape.row_min(d_batch));
  g.re = tape.sum(tape.col_min(d_batch));

  const std::size_t k = prototypes.rows();
  Tensor upper(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      upper(i, j) = 1.0;
  const ad::Var dist = tape.pairwise_dist(prototypes, prototypes);
  const ad::Var hinge = tape.relu(tape.affine(dist, -1.0, d_min));
  g.rd = tape.sum(hinge * hinge * tape.constant(std::move(upper)));

  g.l1 = tape.sum(tape.abs(weights));
  return g;
}

} // namespace

RegularizerValues regularizers(const Tensor &prototypes,
                               const std::vector<std::vector<double>> &batch_embeddings,
                               const Tensor &weights, double d_min) {
  if (prototypes.rows == 0)
    throw std::invalid_argument("regularizers: no prototypes");
  if (batch_embeddings.empty())
    throw std::invalid_argument("regularizers: empty batch");
  Tensor batch(batch_embeddings.size(), prototypes.cols);
  for (std::size_t b = 0; b < batch_embeddings.size(); ++b) {
    if (batch_embeddings[b].size() != prototypes.cols)
      throw std::invalid_argument("regularizers: embedding width mismatch");
    std::copy(batch_embeddings[b].begin(), batch_embeddings[b].end(), batch.row(b).begin());
  }
  ad::Tape tape;
  const auto g = build_regularizers(tape, tape.constant(prototypes), tape.constant(std::move(batch)),
                                    tape.constant(weights), d_min);
  return {g.rc.value()[0], g.re.value()[0], g.rd.value()[0], g.l1.value()[0]};
}

LossTerms LossGraph::values() const {
  return LossTerms{ce.value()[0], rc.value()[0], re.value()[0],
                   rd.value()[0], l1.value()[0], total.value()[0]};
}

LossGraph build_loss(ad::Tape &tape, PrototypeModel &model, std::span<const Sequence *const> batch,
                     const Hyperparams &hp, ad::Var prototypes, std::mt19937_64 *dropout_rng) {
  if (batch.empty())
    throw std::invalid_argument("build_loss: empty batch");
  LossGraph g;
  std::vector<ad::Var> ce_terms, embeddings;
  ce_terms.reserve(batch.size());
  embeddings.reserve(batch.size());
  for (const Sequence *seq : batch) {
    ForwardGraph f = build_forward(tape, model, *seq, prototypes, dropout_rng);
    if (model.mode == TaskMode::Multiclass) {
      if (seq->labels.size() != 1)
        throw std::invalid_argument("multiclass example needs exactly one label");
      ce_terms.push_back(tape.cross_entropy(f.scores, static_cast<std::size_t>(seq->labels[0])));
    } else {
      ce_terms.push_back(
          tape.binary_cross_entropy(f.scores, label_targets(seq->labels, model.num_classes)));
    }
    embeddings.push_back(f.embedding);
    g.examples.push_back(f);
  }
  g.ce = tape.sum(tape.concat(ce_terms));
  const auto r = build_regularizers(tape, prototypes, tape.stack_rows(embeddings),
                                    tape.parameter(model.weights), hp.d_min);
  g.rc = r.rc;
  g.re = r.re;
  g.rd = r.rd;
  g.l1 = r.l1;
  g.total = g.ce + tape.affine(g.rc, hp.lambda_c, 0.0) + tape.affine(g.re, hp.lambda_e, 0.0) +
            tape.affine(g.rd, hp.lambda_d, 0.0) + tape.affine(g.l1, hp.lambda_l1, 0.0);
  return g;
}

LossTerms total_loss(const PrototypeModel &model, std::span<const Sequence *const> batch,
                     const Hyperparams &hp) {
  ad::Tape tape;
  auto &m = const_cast<PrototypeModel &>(model);
  return build_loss(tape, m, batch, hp, tape.parameter(m.prototypes)).values();
}

LossTerms total_loss(const PrototypeModel &model, const std::vector<Sequence> &batch,
                     const Hyperparams &hp) {
  std::vector<const Sequence *> ptrs;
  ptrs.reserve(batch.size());
  for (const auto &s : batch)
    ptrs.push_back(&s);
  return total_loss(model, std::span<const Sequence *const>(ptrs), hp);
}

} // namespace protoseq
