// SPDX-License-Identifier: Apache-2.0
#include "protoseq/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace protoseq {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

} // namespace

Explanation explain(const PrototypeModel &model, const Sequence &seq, std::size_t top_n,
                    double min_similarity) {
  Explanation e;
  e.input = seq;
  e.result = forward(model, seq);
  if (model.mode == TaskMode::Multiclass) {
    e.predicted.push_back(predicted_class(e.result));
  } else {
    for (std::size_t c = 0; c < e.result.scores.size(); ++c)
      if (e.result.scores[c] >= 0.5)
        e.predicted.push_back(c);
    if (e.predicted.empty())
      e.predicted.push_back(predicted_class(e.result));
  }

  std::vector<std::size_t> order(model.k());
  std::iota(order.begin(), order.end(), 0);
  const auto &a = e.result.similarities;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a[x] > a[y]; });
  for (std::size_t i : order) {
    if (e.contributions.size() >= top_n)
      break;
    if (a[i] < min_similarity)
      break;
    Contribution c;
    c.prototype = i;
    c.similarity = a[i];
    c.weights.resize(model.num_classes);
    for (std::size_t r = 0; r < model.num_classes; ++r)
      c.weights[r] = model.weights.value(r, i);
    c.provenance = model.provenance[i];
    e.contributions.push_back(std::move(c));
  }
  return e;
}

std::vector<double> reconstruct_logits(const Explanation &e, std::size_t num_classes) {
  std::vector<double> z(num_classes, 0.0);
  for (const auto &c : e.contributions)
    for (std::size_t r = 0; r < num_classes; ++r)
      z[r] += c.similarity * c.weights[r];
  return z;
}

std::string format_weights(const PrototypeModel &model, const std::vector<double> &column) {
  std::vector<std::size_t> order(column.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return column[x] > column[y]; });
  std::string out;
  for (std::size_t c : order) {
    if (std::stod(fixed(column[c], 1)) <= 0.0)
      break;
    if (!out.empty())
      out += ", ";
    out += model.class_name(c) + " " + fixed(column[c], 1);
  }
  if (out.empty() && !order.empty())
    out = model.class_name(order.front()) + " " + fixed(column[order.front()], 1);
  return out;
}

std::string render_explanation(const PrototypeModel &model, const Explanation &e) {
  const Vocabulary *vocab = model.encoder.config().input_kind == StepKind::Token ? &model.vocab
                                                                                 : nullptr;
  std::string out = "Input:       " + render_steps(e.input, vocab) + "\n";
  std::string pred;
  for (std::size_t c : e.predicted)
    pred += (pred.empty() ? "" : ", ") + model.class_name(c);
  out += "Prediction:  " + pred + "\n";
  if (e.contributions.empty())
    return out + "Explanation: (no prototype above the similarity threshold)\n";
  for (std::size_t i = 0; i < e.contributions.size(); ++i) {
    const Contribution &c = e.contributions[i];
    out += i == 0 ? "Explanation:   " : "             + ";
    out += fixed(c.similarity, 2) + " * ";
    out += c.provenance ? render_steps(*c.provenance, vocab) : std::string("<prototype ") +
                                                                   std::to_string(c.prototype) + ">";
    out += " (" + format_weights(model, c.weights) + ")\n";
  }
  return out;
}

std::vector<bool> effective_prototypes(const PrototypeModel &model, double tau) {
  const Tensor &W = model.weights.value;
  const double global = W.data.empty() ? 0.0 : *std::max_element(W.data.begin(), W.data.end());
  std::vector<bool> eff(model.k(), false);
  for (std::size_t i = 0; i < model.k(); ++i) {
    double col = 0.0;
    for (std::size_t r = 0; r < W.rows; ++r)
      col = std::max(col, W(r, i));
    eff[i] = !(col < tau * global);
  }
  return eff;
}

void remove_prototypes(PrototypeModel &model, std::vector<std::size_t> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (std::size_t id : ids)
    if (id >= model.k())
      throw std::out_of_range("prototype " + std::to_string(id) + " does not exist");
  const std::size_t k = model.k();
  if (ids.size() >= k)
    throw std::invalid_argument("cannot remove every prototype");
  std::vector<bool> drop(k, false);
  for (std::size_t id : ids)
    drop[id] = true;

  const std::size_t nk = k - ids.size(), m = model.prototypes.value.cols, C = model.num_classes;
  Tensor P(nk, m), W(C, nk);
  std::vector<std::optional<Sequence>> prov;
  prov.reserve(nk);
  for (std::size_t i = 0, j = 0; i < k; ++i) {
    if (drop[i])
      continue;
    std::copy(model.prototypes.value.row(i).begin(), model.prototypes.value.row(i).end(),
              P.row(j).begin());
    for (std::size_t r = 0; r < C; ++r)
      W(r, j) = model.weights.value(r, i);
    prov.push_back(std::move(model.provenance[i]));
    ++j;
  }
  model.prototypes.value = std::move(P);
  model.prototypes.grad = Tensor();
  model.weights.value = std::move(W);
  model.weights.grad = Tensor();
  model.provenance = std::move(prov);
  model.hparams.prototypes = nk;
}

PruneResult prune(PrototypeModel &model, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("prune threshold must lie in (0, 1)");
  const auto eff = effective_prototypes(model, tau);
  PruneResult r;
  for (std::size_t i = 0; i < eff.size(); ++i)
    (eff[i] ? r.kept : r.removed).push_back(i);
  if (r.kept.empty())
    throw std::invalid_argument("pruning would remove every prototype");
  if (!r.removed.empty())
    remove_prototypes(model, r.removed);
  return r;
}

std::vector<Neighbor> neighbors(const PrototypeModel &model, std::size_t id,
                                const std::vector<std::vector<double>> &embeddings,
                                std::size_t n) {
  if (id >= model.k())
    throw std::out_of_range("prototype " + std::to_string(id) + " does not exist");
  if (n < 1)
    throw std::invalid_argument("neighbor count must be >= 1");
  Tensor row(1, model.prototypes.value.cols);
  std::copy(model.prototypes.value.row(id).begin(), model.prototypes.value.row(id).end(),
            row.data.begin());
  std::vector<Neighbor> all;
  all.reserve(embeddings.size());
  for (std::size_t j = 0; j < embeddings.size(); ++j)
    all.push_back({j, similarity(embeddings[j], row)[0]});
  const std::size_t take = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    [](const Neighbor &x, const Neighbor &y) {
                      return x.similarity != y.similarity ? x.similarity > y.similarity
                                                          : x.index < y.index;
                    });
  all.resize(take);
  return all;
}

std::vector<Neighbor> neighbors(const PrototypeModel &model, std::size_t id,
                                const std::vector<Sequence> &data, std::size_t n) {
  if (id >= model.k())
    throw std::out_of_range("prototype " + std::to_string(id) + " does not exist");
  return neighbors(model, id, model.encoder.embed_all(data), n);
}

} // namespace protoseq
