// SPDX-License-Identifier: Apache-2.0
#include "protoseq/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "protoseq/json_io.hpp"

namespace protoseq {

using nlohmann::json;

const char *split_name(Split s) {
  switch (s) {
  case Split::Train: return "train";
  case Split::Val: return "val";
  case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(const std::string &name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + name + "'");
}

Dataset Dataset::subset(Split s) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < sequences.size(); ++i)
    if (splits[i] == s)
      idx.push_back(i);
  return subset(idx);
}

Dataset Dataset::subset(const std::vector<std::size_t> &indices) const {
  Dataset out;
  out.kind = kind;
  out.width = width;
  out.mode = mode;
  out.num_classes = num_classes;
  out.vocab = vocab;
  out.class_names = class_names;
  out.sequences.reserve(indices.size());
  out.splits.reserve(indices.size());
  for (auto i : indices) {
    out.sequences.push_back(sequences.at(i));
    out.splits.push_back(splits.at(i));
  }
  return out;
}

void Dataset::validate() const {
  if (splits.size() != sequences.size())
    throw std::invalid_argument("dataset: split tags do not cover every sequence");
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const Sequence &s = sequences[i];
    if (s.kind != kind || (kind != StepKind::Token && s.width != width))
      throw std::invalid_argument("dataset: sequence " + std::to_string(i) +
                                  " has a different step kind or width");
    if (mode == TaskMode::Multiclass && s.labels.size() != 1)
      throw std::invalid_argument("dataset: sequence " + std::to_string(i) +
                                  " needs exactly one label");
    for (int c : s.labels)
      if (c < 0 || static_cast<std::size_t>(c) >= num_classes)
        throw std::invalid_argument("dataset: sequence " + std::to_string(i) + " label " +
                                    std::to_string(c + 1) + " outside 1.." +
                                    std::to_string(num_classes));
  }
}

namespace {

struct RawRecord {
  std::size_t line = 0;
  std::vector<std::string> words;         // text
  std::vector<std::vector<long>> events;  // events
  std::vector<std::vector<double>> rows;  // series
  std::vector<long> labels;               // 1-based
  Split split = Split::Train;
};

bool has_steps(const json &j) {
  return j.contains("tokens") || j.contains("text") || j.contains("events") || j.contains("values");
}

StepKind record_kind(const json &j) {
  if (j.contains("tokens") || j.contains("text")) return StepKind::Token;
  if (j.contains("events")) return StepKind::MultiHot;
  return StepKind::Real;
}

} // namespace

Dataset parse_dataset(const std::string &text, const std::string &origin, const Vocabulary *vocab,
                      std::optional<StepKind> expected_schema) {
  std::istringstream in(text);
  std::string line;
  std::optional<StepKind> kind;
  std::optional<std::size_t> declared_classes, declared_width;
  std::optional<TaskMode> declared_mode;
  std::vector<std::string> class_names;
  std::vector<RawRecord> records;
  bool any_multi = false;

  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const auto fail = [&](const std::string &what) { throw DatasetError(origin, lineno, what); };
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      fail(std::string("malformed record: ") + e.what());
    }
    if (!j.is_object())
      fail("record must be a JSON object");
    try {
      if (!has_steps(j)) {
        if (!records.empty() || !j.contains("schema"))
          fail("record has no tokens, text, events or values");
        kind = parse_step_kind(j.at("schema").get<std::string>());
        if (j.contains("num_classes")) declared_classes = j.at("num_classes").get<std::size_t>();
        if (j.contains("width")) declared_width = j.at("width").get<std::size_t>();
        if (j.contains("task")) declared_mode = parse_task_mode(j.at("task").get<std::string>());
        if (j.contains("class_names")) class_names = j.at("class_names").get<std::vector<std::string>>();
        continue;
      }
      const StepKind rk = j.contains("schema") ? parse_step_kind(j.at("schema").get<std::string>())
                                               : record_kind(j);
      if (!kind)
        kind = rk;
      else if (*kind != rk)
        fail(std::string("record schema ") + step_kind_name(rk) + " differs from file schema " +
             step_kind_name(*kind));

      RawRecord r;
      r.line = lineno;
      if (rk == StepKind::Token) {
        r.words = j.contains("tokens") ? j.at("tokens").get<std::vector<std::string>>()
                                       : split_words(j.at("text").get<std::string>());
      } else if (rk == StepKind::MultiHot) {
        r.events = j.at("events").get<std::vector<std::vector<long>>>();
        for (const auto &step : r.events)
          for (long e : step)
            if (e < 0)
              fail("negative event index");
      } else {
        r.rows = j.at("values").get<std::vector<std::vector<double>>>();
      }
      if (j.contains("labels")) {
        r.labels = j.at("labels").get<std::vector<long>>();
        any_multi = true;
      } else if (j.contains("label")) {
        r.labels = {j.at("label").get<long>()};
      } else {
        fail("record has no label");
      }
      for (long c : r.labels) {
        if (c < 1)
          fail("label " + std::to_string(c) + " out of range (labels are 1-based)");
        if (declared_classes && static_cast<std::size_t>(c) > *declared_classes)
          fail("label " + std::to_string(c) + " exceeds num_classes " +
               std::to_string(*declared_classes));
      }
      if (j.contains("split"))
        r.split = parse_split(j.at("split").get<std::string>());
      records.push_back(std::move(r));
    } catch (const DatasetError &) {
      throw;
    } catch (const std::exception &e) {
      fail(e.what());
    }
  }

  Dataset data;
  data.kind = kind.value_or(expected_schema.value_or(StepKind::Token));
  if (expected_schema && data.kind != *expected_schema)
    throw DatasetError(origin, 1,
                       std::string("schema is ") + step_kind_name(data.kind) + ", expected " +
                           step_kind_name(*expected_schema));
  data.mode = declared_mode.value_or(any_multi ? TaskMode::Multilabel : TaskMode::Multiclass);
  data.class_names = class_names;

  std::size_t max_label = 0, max_event = 0, series_width = 0;
  for (const auto &r : records) {
    for (long c : r.labels)
      max_label = std::max(max_label, static_cast<std::size_t>(c));
    for (const auto &step : r.events)
      for (long e : step)
        max_event = std::max(max_event, static_cast<std::size_t>(e) + 1);
    for (const auto &row : r.rows) {
      if (series_width == 0)
        series_width = row.size();
      else if (row.size() != series_width)
        throw DatasetError(origin, r.line, "series steps have inconsistent widths");
    }
  }
  data.num_classes = declared_classes.value_or(std::max(max_label, class_names.size()));
  if (data.kind == StepKind::MultiHot) {
    data.width = declared_width.value_or(max_event);
    if (max_event > data.width)
      throw DatasetError(origin, 1, "event index exceeds declared width");
  } else if (data.kind == StepKind::Real) {
    data.width = declared_width.value_or(series_width);
    if (series_width != 0 && series_width != data.width)
      throw DatasetError(origin, 1, "series width differs from declared width");
  }

  if (data.kind == StepKind::Token) {
    if (vocab) {
      data.vocab = *vocab;
    } else {
      std::vector<std::vector<std::string>> corpus;
      corpus.reserve(records.size());
      for (const auto &r : records)
        corpus.push_back(r.words);
      data.vocab = Vocabulary::build(corpus);
    }
  }

  for (auto &r : records) {
    std::vector<int> labels;
    for (long c : r.labels)
      labels.push_back(static_cast<int>(c - 1));
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (data.mode == TaskMode::Multiclass && labels.size() != 1)
      throw DatasetError(origin, r.line, "multiclass record needs exactly one label");
    Sequence s;
    if (data.kind == StepKind::Token) {
      s = Sequence::from_tokens(data.vocab.encode(r.words), labels);
    } else if (data.kind == StepKind::MultiHot) {
      std::vector<double> v(r.events.size() * data.width, 0.0);
      for (std::size_t t = 0; t < r.events.size(); ++t)
        for (long e : r.events[t])
          v[t * data.width + static_cast<std::size_t>(e)] = 1.0;
      s = Sequence::from_vectors(StepKind::MultiHot, data.width, std::move(v), labels);
    } else {
      std::vector<double> v;
      for (const auto &row : r.rows)
        v.insert(v.end(), row.begin(), row.end());
      s = data.width == 0 ? Sequence{StepKind::Real, 0, {}, {}, labels}
                          : Sequence::from_vectors(StepKind::Real, data.width, std::move(v), labels);
    }
    data.sequences.push_back(std::move(s));
    data.splits.push_back(r.split);
  }
  data.validate();
  return data;
}

Dataset load_dataset(const std::string &path, const Vocabulary *vocab,
                     std::optional<StepKind> expected_schema) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open dataset '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), path, vocab, expected_schema);
}

std::string serialize_dataset(const Dataset &data) {
  std::string out;
  json header = {{"schema", step_kind_name(data.kind)},
                 {"num_classes", data.num_classes},
                 {"task", task_mode_name(data.mode)}};
  if (data.kind != StepKind::Token)
    header["width"] = data.width;
  if (!data.class_names.empty())
    header["class_names"] = data.class_names;
  out += header.dump() + "\n";
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    const Sequence &s = data.sequences[i];
    json r = sequence_to_json(s, &data.vocab);
    std::vector<int> labels;
    for (int c : s.labels)
      labels.push_back(c + 1);
    if (data.mode == TaskMode::Multiclass)
      r["label"] = labels.at(0);
    else
      r["labels"] = labels;
    r["split"] = split_name(data.splits[i]);
    out += r.dump() + "\n";
  }
  return out;
}

void save_dataset(const Dataset &data, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write dataset '" + path + "'");
  out << serialize_dataset(data);
}

void assign_splits(Dataset &data, double train_fraction, double val_fraction, std::uint64_t seed) {
  if (train_fraction < 0 || val_fraction < 0 || train_fraction + val_fraction > 1.0 + 1e-12)
    throw std::invalid_argument("split fractions must be non-negative and sum to at most 1");
  const std::size_t n = data.sequences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train,
                              static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n))));
  data.splits.assign(n, Split::Test);
  for (std::size_t i = 0; i < n; ++i)
    data.splits[order[i]] = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
}

} // namespace protoseq
