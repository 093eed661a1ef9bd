// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace protoseq {

enum class StepKind : std::uint8_t { Token, MultiHot, Real };

const char *step_kind_name(StepKind kind);
StepKind parse_step_kind(const std::string &name);

enum class TaskMode : std::uint8_t { Multiclass, Multilabel };

const char *task_mode_name(TaskMode mode);
TaskMode parse_task_mode(const std::string &name);

/// An ordered list of steps of a single kind. Token sequences keep ids in
/// `tokens`; vector sequences keep a row-major T x width block in `values`.
/// Labels are 0-based class ids (one entry for multiclass data).
struct Sequence {
  StepKind kind = StepKind::Token;
  std::size_t width = 0; // vector width; 0 for token sequences
  std::vector<std::int32_t> tokens;
  std::vector<double> values;
  std::vector<int> labels;

  static Sequence from_tokens(std::vector<std::int32_t> ids, std::vector<int> labels = {});
  static Sequence from_vectors(StepKind kind, std::size_t width, std::vector<double> values,
                               std::vector<int> labels = {});

  std::size_t length() const {
    return kind == StepKind::Token ? tokens.size()
                                   : (width == 0 ? 0 : values.size() / width);
  }
  bool empty() const { return length() == 0; }

  /// Steps at `positions` (ascending), labels carried over.
  Sequence select(const std::vector<std::uint32_t> &positions) const;

  /// Same steps (labels ignored).
  bool same_steps(const Sequence &other) const;
  bool operator==(const Sequence &other) const = default;
};

/// Token <-> id table. Row 0 is the reserved unknown token.
class Vocabulary {
public:
  static constexpr std::int32_t kUnknown = 0;
  static constexpr const char *kUnknownToken = "<unk>";

  Vocabulary();

  /// Ids assigned by descending frequency, ties broken lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>> &corpus);
  static Vocabulary from_tokens(const std::vector<std::string> &ordered);

  std::int32_t id(const std::string &token) const;
  const std::string &token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string> &tokens() const { return tokens_; }

  std::vector<std::int32_t> encode(const std::vector<std::string> &words) const;

  bool operator==(const Vocabulary &o) const { return tokens_ == o.tokens_; }

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Human-readable rendering of a sequence's steps: words for token data,
/// `{i,j}` event sets for multi-hot data, bracketed values for real data.
std::string render_steps(const Sequence &seq, const Vocabulary *vocab);

/// Split whitespace-separated text into words.
std::vector<std::string> split_words(const std::string &text);

} // namespace protoseq
