// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "protoseq/sequence.hpp"

namespace protoseq {

enum class Split : std::uint8_t { Train, Val, Test };

const char *split_name(Split s);
Split parse_split(const std::string &name);

/// Labelled sequences of one step kind. Labels are 0-based in memory and
/// 1-based in files.
struct Dataset {
  StepKind kind = StepKind::Token;
  std::size_t width = 0; // vector width for events/series
  TaskMode mode = TaskMode::Multiclass;
  std::size_t num_classes = 0;
  Vocabulary vocab;
  std::vector<std::string> class_names;
  std::vector<Sequence> sequences;
  std::vector<Split> splits; // parallel to sequences

  std::size_t size() const { return sequences.size(); }
  bool empty() const { return sequences.empty(); }

  /// Sequences tagged `s`, sharing this dataset's metadata.
  Dataset subset(Split s) const;
  Dataset subset(const std::vector<std::size_t> &indices) const;

  /// Throws std::invalid_argument if labels, step kinds or split tags are
  /// inconsistent.
  void validate() const;
};

/// Error reading a dataset file; carries the 1-based line number.
class DatasetError : public std::runtime_error {
public:
  DatasetError(const std::string &path, std::size_t line, const std::string &what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Reads UTF-8 line-delimited JSON records.
///
/// An optional first line without step data is a header:
///   {"schema": "text"|"events"|"series", "num_classes": C, "task": "multiclass"|"multilabel",
///    "class_names": [...], "width": n}
/// Records carry one of "tokens" (list of strings), "text" (whitespace
/// separated), "events" (list of lists of 0-based indices) or "values" (list
/// of real vectors), plus "label" (1-based int) or "labels" (list of
/// 1-based ints), and optionally "split": "train"|"val"|"test" (default
/// train).
///
/// When `vocab` is given, tokens map through it (unknown words to row 0);
/// otherwise a vocabulary is built from the file. `expected_schema`, when
/// set, must match the file's schema.
Dataset load_dataset(const std::string &path, const Vocabulary *vocab = nullptr,
                     std::optional<StepKind> expected_schema = std::nullopt);

/// Parses dataset text (same format as load_dataset). `origin` names the
/// source in error messages.
Dataset parse_dataset(const std::string &text, const std::string &origin,
                      const Vocabulary *vocab = nullptr,
                      std::optional<StepKind> expected_schema = std::nullopt);

/// Writes the header plus one record per sequence.
void save_dataset(const Dataset &data, const std::string &path);
std::string serialize_dataset(const Dataset &data);

/// Random train/val/test assignment with the given fractions (rest is test).
void assign_splits(Dataset &data, double train_fraction, double val_fraction, std::uint64_t seed);

} // namespace protoseq
