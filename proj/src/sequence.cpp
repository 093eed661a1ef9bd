// SPDX-License-Identifier: Apache-2.0
#include "protoseq/sequence.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace protoseq {

const char *step_kind_name(StepKind kind) {
  switch (kind) {
  case StepKind::Token: return "text";
  case StepKind::MultiHot: return "events";
  case StepKind::Real: return "series";
  }
  return "text";
}

StepKind parse_step_kind(const std::string &name) {
  if (name == "text") return StepKind::Token;
  if (name == "events") return StepKind::MultiHot;
  if (name == "series") return StepKind::Real;
  throw std::invalid_argument("unknown schema '" + name + "' (expected text, events or series)");
}

const char *task_mode_name(TaskMode mode) {
  return mode == TaskMode::Multiclass ? "multiclass" : "multilabel";
}

TaskMode parse_task_mode(const std::string &name) {
  if (name == "multiclass") return TaskMode::Multiclass;
  if (name == "multilabel") return TaskMode::Multilabel;
  throw std::invalid_argument("unknown task mode '" + name + "'");
}

Sequence Sequence::from_tokens(std::vector<std::int32_t> ids, std::vector<int> labels) {
  Sequence s;
  s.kind = StepKind::Token;
  s.tokens = std::move(ids);
  s.labels = std::move(labels);
  return s;
}

Sequence Sequence::from_vectors(StepKind kind, std::size_t width, std::vector<double> values,
                                std::vector<int> labels) {
  if (kind == StepKind::Token)
    throw std::invalid_argument("from_vectors needs a vector step kind");
  if (width == 0 || values.size() % width != 0)
    throw std::invalid_argument("vector steps: " + std::to_string(values.size()) +
                                " values do not tile width " + std::to_string(width));
  Sequence s;
  s.kind = kind;
  s.width = width;
  s.values = std::move(values);
  s.labels = std::move(labels);
  return s;
}

Sequence Sequence::select(const std::vector<std::uint32_t> &positions) const {
  Sequence out;
  out.kind = kind;
  out.width = width;
  out.labels = labels;
  if (kind == StepKind::Token) {
    out.tokens.reserve(positions.size());
    for (auto p : positions)
      out.tokens.push_back(tokens.at(p));
  } else {
    out.values.reserve(positions.size() * width);
    for (auto p : positions) {
      if (p >= length())
        throw std::out_of_range("select: position out of range");
      out.values.insert(out.values.end(), values.begin() + static_cast<std::ptrdiff_t>(p * width),
                        values.begin() + static_cast<std::ptrdiff_t>((p + 1) * width));
    }
  }
  return out;
}

bool Sequence::same_steps(const Sequence &o) const {
  return kind == o.kind && width == o.width && tokens == o.tokens && values == o.values;
}

Vocabulary::Vocabulary() : tokens_{kUnknownToken} { index_.emplace(kUnknownToken, kUnknown); }

Vocabulary Vocabulary::from_tokens(const std::vector<std::string> &ordered) {
  Vocabulary v;
  for (const auto &t : ordered) {
    if (t == kUnknownToken)
      continue;
    if (v.index_.count(t))
      throw std::invalid_argument("duplicate vocabulary entry '" + t + "'");
    v.index_.emplace(t, static_cast<std::int32_t>(v.tokens_.size()));
    v.tokens_.push_back(t);
  }
  return v;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>> &corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto &doc : corpus)
    for (const auto &w : doc)
      if (w != kUnknownToken)
        ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  std::vector<std::string> ordered;
  ordered.reserve(ranked.size());
  for (auto &[w, c] : ranked)
    ordered.push_back(w);
  return from_tokens(ordered);
}

std::int32_t Vocabulary::id(const std::string &token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

const std::string &Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    return tokens_[kUnknown];
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::encode(const std::vector<std::string> &words) const {
  std::vector<std::int32_t> ids;
  ids.reserve(words.size());
  for (const auto &w : words)
    ids.push_back(id(w));
  return ids;
}

std::vector<std::string> split_words(const std::string &text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;)
    words.push_back(w);
  return words;
}

std::string render_steps(const Sequence &seq, const Vocabulary *vocab) {
  std::string out;
  const std::size_t n = seq.length();
  for (std::size_t t = 0; t < n; ++t) {
    if (t)
      out += ' ';
    if (seq.kind == StepKind::Token) {
      out += vocab ? vocab->token(seq.tokens[t]) : std::to_string(seq.tokens[t]);
    } else if (seq.kind == StepKind::MultiHot) {
      out += '{';
      bool first = true;
      for (std::size_t j = 0; j < seq.width; ++j)
        if (seq.values[t * seq.width + j] != 0.0) {
          if (!first)
            out += ',';
          out += std::to_string(j);
          first = false;
        }
      out += '}';
    } else {
      out += '[';
      for (std::size_t j = 0; j < seq.width; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%.3g", j ? "," : "", seq.values[t * seq.width + j]);
        out += buf;
      }
      out += ']';
    }
  }
  return out;
}

} // namespace protoseq
