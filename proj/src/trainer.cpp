// SPDX-License-Identifier: Apache-2.0
#include "protoseq/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "protoseq/kernels.hpp"
#include "protoseq/metrics.hpp"
#include "protoseq/simplifier.hpp"

namespace protoseq {

void initialize_prototypes(PrototypeModel &model, const std::vector<Sequence> &data,
                           std::uint64_t seed) {
  const std::size_t k = model.k();
  if (k > data.size())
    throw std::invalid_argument("cannot draw " + std::to_string(k) + " prototypes from " +
                                std::to_string(data.size()) + " training sequences");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x51ed2701a3c4b5d7ULL);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto e = model.encoder.embed(data[order[i]]);
    std::copy(e.begin(), e.end(), model.prototypes.value.row(i).begin());
    model.provenance[i] = data[order[i]];
  }
}

std::vector<std::size_t> project_prototypes(PrototypeModel &model,
                                            const std::vector<Sequence> &data,
                                            const std::vector<std::vector<double>> &embeddings) {
  if (data.empty())
    throw std::invalid_argument("project_prototypes: empty dataset");
  if (embeddings.size() != data.size())
    throw std::invalid_argument("project_prototypes: embeddings do not match dataset");
  const auto &kern = kernels::active();
  const std::size_t m = model.m();
  std::vector<std::size_t> chosen(model.k());
  for (std::size_t i = 0; i < model.k(); ++i) {
    const double *p = model.prototypes.value.row(i).data();
    double best = kern.squared_distance(p, embeddings[0].data(), m);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < embeddings.size(); ++j) {
      const double d = kern.squared_distance(p, embeddings[j].data(), m);
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    chosen[i] = arg;
  }
  for (std::size_t i = 0; i < model.k(); ++i) {
    const auto &e = embeddings[chosen[i]];
    std::copy(e.begin(), e.end(), model.prototypes.value.row(i).begin());
    model.provenance[i] = data[chosen[i]];
  }
  return chosen;
}

std::vector<std::size_t> project_prototypes(PrototypeModel &model,
                                            const std::vector<Sequence> &data) {
  return project_prototypes(model, data, model.encoder.embed_all(data));
}

double gradient_norm(const std::vector<ad::Parameter *> &params) {
  double s = 0.0;
  for (const ad::Parameter *p : params)
    for (double g : p->grad.data)
      s += g * g;
  return std::sqrt(s);
}

double clip_gradients(const std::vector<ad::Parameter *> &params, double clip) {
  const double norm = gradient_norm(params);
  if (norm > clip && norm > 0.0) {
    const double scale = clip / norm;
    for (ad::Parameter *p : params)
      for (double &g : p->grad.data)
        g *= scale;
  }
  return norm;
}

void refresh_pinned_prototypes(PrototypeModel &model) {
  for (std::size_t i = 0; i < model.k(); ++i) {
    if (!model.provenance[i])
      throw std::invalid_argument("prototype " + std::to_string(i) + " has no provenance");
    const auto e = model.encoder.embed(*model.provenance[i]);
    std::copy(e.begin(), e.end(), model.prototypes.value.row(i).begin());
  }
}

double quick_score(const PrototypeModel &model, const std::vector<Sequence> &data) {
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<int>> truth;
  scores.reserve(data.size());
  for (const auto &s : data) {
    scores.push_back(forward(model, s).scores);
    truth.push_back(s.labels);
  }
  const MetricSet m = evaluate_metrics(scores, truth, model.mode);
  return model.mode == TaskMode::Multiclass ? m.accuracy : m.recall_at_5;
}

namespace {

void projection_pass(PrototypeModel &model, const std::vector<Sequence> &data,
                     const Hyperparams &hp) {
  if (hp.simplify) {
    simplify_prototypes(model, data, SimplifyOptions{hp.beam_width, hp.length_penalty});
  } else {
    project_prototypes(model, data);
  }
}

} // namespace

void run_epochs(PrototypeModel &model, const std::vector<Sequence> &data, const Hyperparams &hp,
                std::size_t epochs, PrototypeMode mode, TrainState &state,
                const TrainOptions &options) {
  hp.validate();
  if (data.empty())
    throw std::invalid_argument("training data is empty");
  for (const auto &s : data)
    if (s.empty())
      throw std::invalid_argument("training sequences must have at least one step");
  const bool pinned = mode == PrototypeMode::Pinned;
  if (pinned)
    refresh_pinned_prototypes(model);

  std::vector<ad::Parameter *> params;
  for (auto &p : model.encoder.parameters())
    params.push_back(&p);
  if (!pinned)
    params.push_back(&model.prototypes);
  params.push_back(&model.weights);

  // Separate streams for batch order and dropout keep runs reproducible.
  std::mt19937_64 order_rng(state.seed + 0x2545f4914f6cdd1dULL * (state.epoch + 1));
  std::mt19937_64 dropout_rng(state.seed ^ (0xd1b54a32d192ed03ULL + state.epoch));
  std::mt19937_64 *drop = hp.dropout > 0.0 ? &dropout_rng : nullptr;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Sequence *> batch;
  const std::size_t first = state.epoch + 1;
  const std::size_t last = state.epoch + epochs;
  bool projected_last = false;

  for (std::size_t epoch = first; epoch <= last; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = hp.learning_rate(epoch);
    state.lr = rec.lr;
    std::shuffle(order.begin(), order.end(), order_rng);

    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      batch.clear();
      for (std::size_t b = start; b < end; ++b)
        batch.push_back(&data[order[b]]);

      ad::Tape tape;
      ad::Var P;
      if (pinned) {
        std::vector<ad::Var> rows;
        rows.reserve(model.k());
        for (std::size_t i = 0; i < model.k(); ++i)
          rows.push_back(model.encoder.encode(tape, *model.provenance[i], drop));
        P = tape.stack_rows(rows);
      } else {
        P = tape.parameter(model.prototypes);
      }
      const LossGraph g = build_loss(tape, model, batch, hp, P, drop);
      const LossTerms terms = g.values();
      if (const std::string bad = terms.first_non_finite(); !bad.empty())
        throw TrainingError(bad, epoch, state.step + 1);
      rec.loss += terms;

      for (ad::Parameter *p : params)
        p->zero_grad();
      tape.backward(g.total);
      const double norm = clip_gradients(params, hp.clip_norm);
      if (!std::isfinite(norm))
        throw TrainingError("gradient", epoch, state.step + 1);
      state.max_grad_norm = std::max(state.max_grad_norm, norm);
      state.max_clipped_norm = std::max(state.max_clipped_norm, gradient_norm(params));

      for (ad::Parameter *p : params) {
        if (p->grad.empty())
          continue;
        kernels::active().axpy(-rec.lr, p->grad.data.data(), p->value.data.data(),
                               p->value.data.size());
      }
      for (double &w : model.weights.value.data)
        w = std::max(w, 0.0);
      for (double w : model.weights.value.data)
        if (w < 0.0)
          ++state.weight_violations;
      if (pinned)
        refresh_pinned_prototypes(model);

      ++state.step;
      ++rec.steps;
      if (options.on_step)
        options.on_step(model, state);
    }

    projected_last = false;
    if (!pinned && hp.projection_every > 0 && epoch % hp.projection_every == 0) {
      projection_pass(model, data, hp);
      state.projection_log.push_back(epoch);
      rec.projected = true;
      projected_last = true;
    }
    if (options.validation && !options.validation->empty())
      rec.val_accuracy = quick_score(model, options.validation->sequences);
    state.epoch = epoch;
    state.history.push_back(rec);
    if (options.on_epoch)
      options.on_epoch(state.history.back());
  }

  if (!pinned && !projected_last) {
    projection_pass(model, data, hp);
    state.final_projection = true;
  }
}

TrainResult train(const Dataset &train_data, const Hyperparams &hp, std::uint64_t seed,
                  const TrainOptions &options) {
  hp.validate();
  if (train_data.empty())
    throw std::invalid_argument("training data is empty");
  train_data.validate();
  TrainResult r;
  r.model = make_model(hp, train_data.kind, train_data.vocab.size(), train_data.width,
                       train_data.mode, train_data.num_classes, seed);
  r.model.vocab = train_data.vocab;
  r.model.class_names = train_data.class_names;
  initialize_prototypes(r.model, train_data.sequences, seed);
  r.state.seed = seed;
  r.state.lr = hp.learning_rate(1);
  run_epochs(r.model, train_data.sequences, hp, hp.epochs, PrototypeMode::Free, r.state, options);
  return r;
}

} // namespace protoseq
