// SPDX-License-Identifier: Apache-2.0
#include "protoseq/simplifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

#include "protoseq/kernels.hpp"
#include "protoseq/model.hpp"

namespace protoseq {

namespace {

std::string content_key(const Sequence &s) {
  std::string key;
  if (s.kind == StepKind::Token) {
    key.resize(s.tokens.size() * sizeof(std::int32_t));
    std::memcpy(key.data(), s.tokens.data(), key.size());
  } else {
    key.resize(s.values.size() * sizeof(double));
    std::memcpy(key.data(), s.values.data(), key.size());
  }
  return key;
}

double distance_to(std::span<const double> prototype, const std::vector<double> &e) {
  return std::sqrt(kernels::active().squared_distance(prototype.data(), e.data(), e.size()));
}

} // namespace

bool candidate_before(const BeamCandidate &a, const BeamCandidate &b) {
  if (a.score != b.score)
    return a.score < b.score;
  if (a.positions.size() != b.positions.size())
    return a.positions.size() < b.positions.size();
  if (a.source != b.source)
    return a.source < b.source;
  return a.positions < b.positions;
}

std::vector<Sequence> remove_one_subsequences(const Sequence &seq) {
  std::vector<Sequence> out;
  const std::size_t n = seq.length();
  if (n <= 1)
    return out;
  std::unordered_map<std::string, bool> seen;
  std::vector<std::uint32_t> keep;
  for (std::size_t drop = 0; drop < n; ++drop) {
    keep.clear();
    for (std::size_t t = 0; t < n; ++t)
      if (t != drop)
        keep.push_back(static_cast<std::uint32_t>(t));
    Sequence child = seq.select(keep);
    if (seen.emplace(content_key(child), true).second)
      out.push_back(std::move(child));
  }
  return out;
}

SimplifyResult simplify_prototype(const Encoder &encoder, std::span<const double> prototype,
                                  const std::vector<Sequence> &data,
                                  const std::vector<std::vector<double>> &embeddings,
                                  const SimplifyOptions &options) {
  if (data.empty())
    throw std::invalid_argument("simplify_prototype: empty dataset");
  if (embeddings.size() != data.size())
    throw std::invalid_argument("simplify_prototype: embeddings do not match dataset");
  if (options.beam_width < 1)
    throw std::invalid_argument("simplify_prototype: beam width must be >= 1");
  if (prototype.size() != encoder.embedding_size())
    throw std::invalid_argument("simplify_prototype: prototype width mismatch");
  const std::size_t w = options.beam_width;
  const double gamma = options.length_penalty;

  SimplifyResult result;
  const auto make = [&](std::size_t source, std::vector<std::uint32_t> positions, Sequence steps,
                        const std::vector<double> &e) {
    BeamCandidate c;
    c.source = source;
    c.positions = std::move(positions);
    c.steps = std::move(steps);
    c.distance = distance_to(prototype, e);
    c.score = c.distance + gamma * static_cast<double>(c.positions.size());
    return c;
  };
  const auto keep_best = [&](std::vector<BeamCandidate> &cands) {
    const std::size_t n = std::min(w, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(n), cands.end(),
                      candidate_before);
    cands.resize(n);
  };

  // Seed with the closest full sequences.
  std::vector<BeamCandidate> beam;
  beam.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].empty())
      continue;
    std::vector<std::uint32_t> all(data[i].length());
    for (std::size_t t = 0; t < all.size(); ++t)
      all[t] = static_cast<std::uint32_t>(t);
    beam.push_back(make(i, std::move(all), data[i], embeddings[i]));
  }
  if (beam.empty())
    throw std::invalid_argument("simplify_prototype: every sequence is empty");
  keep_best(beam);
  BeamCandidate best = beam.front();
  result.best_score_trace.push_back(best.score);

  std::vector<std::uint32_t> child_pos;
  for (;;) {
    // Remove-one children of every beam member, merged by content.
    std::unordered_map<std::string, std::size_t> index;
    std::vector<BeamCandidate> children;
    for (const BeamCandidate &s : beam) {
      const std::size_t n = s.positions.size();
      if (n <= 1)
        continue;
      for (std::size_t drop = 0; drop < n; ++drop) {
        child_pos.clear();
        for (std::size_t t = 0; t < n; ++t)
          if (t != drop)
            child_pos.push_back(s.positions[t]);
        BeamCandidate c;
        c.source = s.source;
        c.positions = child_pos;
        c.steps = data[s.source].select(child_pos);
        auto [it, fresh] = index.emplace(content_key(c.steps), children.size());
        if (fresh) {
          children.push_back(std::move(c));
        } else {
          BeamCandidate &prev = children[it->second];
          if (c.source < prev.source || (c.source == prev.source && c.positions < prev.positions)) {
            prev.source = c.source;
            prev.positions = std::move(c.positions);
          }
        }
      }
    }
    if (children.empty())
      break;
    for (BeamCandidate &c : children) {
      const auto e = encoder.embed(c.steps);
      c.distance = distance_to(prototype, e);
      c.score = c.distance + gamma * static_cast<double>(c.positions.size());
    }
    result.candidates_scored += children.size();
    result.max_candidates_per_iteration =
        std::max(result.max_candidates_per_iteration, children.size());
    ++result.iterations;

    keep_best(children);
    double worst = beam.front().score;
    for (const auto &s : beam)
      worst = std::max(worst, s.score);
    if (!(children.front().score < worst))
      break;
    beam = std::move(children);
    if (candidate_before(beam.front(), best))
      best = beam.front();
    result.best_score_trace.push_back(best.score);
  }

  result.embedding = encoder.embed(best.steps);
  result.best = std::move(best);
  return result;
}

SimplifyResult simplify_prototype(const Encoder &encoder, std::span<const double> prototype,
                                  const std::vector<Sequence> &data,
                                  const SimplifyOptions &options) {
  return simplify_prototype(encoder, prototype, data, encoder.embed_all(data), options);
}

std::vector<SimplifyResult> simplify_prototypes(PrototypeModel &model,
                                                const std::vector<Sequence> &data,
                                                const SimplifyOptions &options) {
  const auto embeddings = model.encoder.embed_all(data);
  std::vector<SimplifyResult> results;
  results.reserve(model.k());
  for (std::size_t i = 0; i < model.k(); ++i) {
    const auto row = model.prototypes.value.row(i);
    results.push_back(simplify_prototype(model.encoder, std::span<const double>(row.data(), row.size()),
                                         data, embeddings, options));
  }
  for (std::size_t i = 0; i < model.k(); ++i) {
    std::copy(results[i].embedding.begin(), results[i].embedding.end(),
              model.prototypes.value.row(i).begin());
    Sequence prov = results[i].best.steps;
    prov.labels = data[results[i].best.source].labels;
    model.provenance[i] = std::move(prov);
  }
  return results;
}

} // namespace protoseq
