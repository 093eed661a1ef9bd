// SPDX-License-Identifier: Apache-2.0
#include "protoseq/json_io.hpp"

#include <stdexcept>

namespace protoseq {

using nlohmann::json;

json sequence_to_json(const Sequence &seq, const Vocabulary *vocab) {
  json j = json::object();
  const std::size_t n = seq.length();
  if (seq.kind == StepKind::Token) {
    if (vocab) {
      std::vector<std::string> words;
      words.reserve(n);
      for (auto id : seq.tokens)
        words.push_back(vocab->token(id));
      j["tokens"] = words;
    } else {
      j["token_ids"] = seq.tokens;
    }
  } else if (seq.kind == StepKind::MultiHot) {
    json steps = json::array();
    for (std::size_t t = 0; t < n; ++t) {
      json ev = json::array();
      for (std::size_t c = 0; c < seq.width; ++c)
        if (seq.values[t * seq.width + c] != 0.0)
          ev.push_back(c);
      steps.push_back(ev);
    }
    j["events"] = steps;
  } else {
    json steps = json::array();
    for (std::size_t t = 0; t < n; ++t)
      steps.push_back(std::vector<double>(seq.values.begin() + static_cast<std::ptrdiff_t>(t * seq.width),
                                          seq.values.begin() + static_cast<std::ptrdiff_t>((t + 1) * seq.width)));
    j["values"] = steps;
  }
  return j;
}

Sequence sequence_from_json(const json &j, StepKind kind, std::size_t width,
                            const Vocabulary *vocab) {
  if (!j.is_object())
    throw std::invalid_argument("sequence must be a JSON object");
  if (kind == StepKind::Token) {
    if (j.contains("token_ids"))
      return Sequence::from_tokens(j.at("token_ids").get<std::vector<std::int32_t>>());
    std::vector<std::string> words;
    if (j.contains("tokens"))
      words = j.at("tokens").get<std::vector<std::string>>();
    else if (j.contains("text"))
      words = split_words(j.at("text").get<std::string>());
    else
      throw std::invalid_argument("token sequence needs \"tokens\" or \"text\"");
    if (!vocab)
      throw std::invalid_argument("token sequence given as words but no vocabulary is available");
    return Sequence::from_tokens(vocab->encode(words));
  }
  if (kind == StepKind::MultiHot) {
    if (!j.contains("events"))
      throw std::invalid_argument("event sequence needs \"events\"");
    const auto events = j.at("events").get<std::vector<std::vector<long>>>();
    std::vector<double> v(events.size() * width, 0.0);
    for (std::size_t t = 0; t < events.size(); ++t)
      for (long e : events[t]) {
        if (e < 0 || static_cast<std::size_t>(e) >= width)
          throw std::invalid_argument("event index " + std::to_string(e) + " outside width " +
                                      std::to_string(width));
        v[t * width + static_cast<std::size_t>(e)] = 1.0;
      }
    return Sequence::from_vectors(StepKind::MultiHot, width, std::move(v));
  }
  if (!j.contains("values"))
    throw std::invalid_argument("series sequence needs \"values\"");
  std::vector<double> v;
  for (const auto &row : j.at("values")) {
    const auto r = row.get<std::vector<double>>();
    if (r.size() != width)
      throw std::invalid_argument("series step width " + std::to_string(r.size()) + ", expected " +
                                  std::to_string(width));
    v.insert(v.end(), r.begin(), r.end());
  }
  return Sequence::from_vectors(StepKind::Real, width, std::move(v));
}

json tensor_to_json(const Tensor &t) {
  return json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
}

Tensor tensor_from_json(const json &j) {
  Tensor t;
  t.rows = j.at("rows").get<std::size_t>();
  t.cols = j.at("cols").get<std::size_t>();
  t.data = j.at("data").get<std::vector<double>>();
  if (t.data.size() != t.rows * t.cols)
    throw std::invalid_argument("tensor data has " + std::to_string(t.data.size()) +
                                " entries, expected " + std::to_string(t.rows * t.cols));
  return t;
}

} // namespace protoseq
