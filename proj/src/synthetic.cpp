// SPDX-License-Identifier: Apache-2.0
#include "protoseq/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "protoseq/hyperparams.hpp"

namespace protoseq {

std::string synthetic_token(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "t%02zu", i);
  return buf;
}

void MotifSpec::validate() const {
  const auto need = [](bool ok, const char *what) {
    if (!ok)
      throw std::invalid_argument(std::string("invalid motif spec: ") + what);
  };
  need(num_classes >= 2, "at least 2 classes are required");
  need(motif_length >= 1, "motif_length must be >= 1");
  need(min_length >= motif_length && max_length >= min_length,
       "need motif_length <= min_length <= max_length");
  need(insert_probability >= 0.0 && insert_probability <= 1.0,
       "insert_probability must be in [0, 1]");
  need(train_fraction >= 0 && val_fraction >= 0 && train_fraction + val_fraction <= 1.0,
       "split fractions must be non-negative and sum to at most 1");
  if (motifs.empty()) {
    need(vocab_size > num_classes * motif_length,
         "vocab_size must leave at least one noise token after the motifs");
  } else {
    need(motifs.size() == num_classes, "one motif per class is required");
    std::set<std::vector<std::string>> distinct(motifs.begin(), motifs.end());
    need(distinct.size() == motifs.size(), "motifs must be class-distinct");
    for (const auto &m : motifs)
      need(m.size() == motif_length, "every motif must have motif_length tokens");
  }
}

MotifSpec motif_spec_from_key_values(const std::map<std::string, std::string> &kv) {
  MotifSpec s;
  const auto as_size = [](const std::string &k, const std::string &v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw std::invalid_argument("synthetic key '" + k + "': expected an integer, got '" + v + "'");
    return out;
  };
  const auto as_double = [](const std::string &k, const std::string &v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw std::invalid_argument("synthetic key '" + k + "': expected a number, got '" + v + "'");
    return out;
  };
  for (const auto &[k, v] : kv) {
    if (k == "num_classes") s.num_classes = as_size(k, v);
    else if (k == "vocab_size") s.vocab_size = as_size(k, v);
    else if (k == "motif_length") s.motif_length = as_size(k, v);
    else if (k == "min_length") s.min_length = as_size(k, v);
    else if (k == "max_length") s.max_length = as_size(k, v);
    else if (k == "insert_probability") s.insert_probability = as_double(k, v);
    else if (k == "train_fraction") s.train_fraction = as_double(k, v);
    else if (k == "val_fraction") s.val_fraction = as_double(k, v);
    else if (k == "seed") s.seed = as_size(k, v);
    else if (k.rfind("motif.", 0) == 0) {
      const std::size_t c = as_size(k, k.substr(6));
      if (c < 1)
        throw std::invalid_argument("motif keys are 1-based (motif.1, motif.2, ...)");
      if (s.motifs.size() < c)
        s.motifs.resize(c);
      s.motifs[c - 1] = split_words(v);
    } else {
      throw std::invalid_argument("unknown synthetic key '" + k + "'");
    }
  }
  s.validate();
  return s;
}

MotifSpec load_motif_spec(const std::string &path) {
  return motif_spec_from_key_values(read_key_value_file(path));
}

bool contains_subsequence(const std::vector<std::string> &words,
                          const std::vector<std::string> &motif) {
  std::size_t j = 0;
  for (const auto &w : words)
    if (j < motif.size() && w == motif[j])
      ++j;
  return j == motif.size();
}

SyntheticData generate_synthetic(const MotifSpec &spec, std::size_t n_sequences) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SyntheticData out;

  std::vector<std::string> alphabet;
  for (std::size_t i = 0; i < spec.vocab_size; ++i)
    alphabet.push_back(synthetic_token(i));

  if (spec.motifs.empty()) {
    std::vector<std::string> pool = alphabet;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t c = 0; c < spec.num_classes; ++c)
      out.motifs.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(c * spec.motif_length),
                              pool.begin() + static_cast<std::ptrdiff_t>((c + 1) * spec.motif_length));
  } else {
    out.motifs = spec.motifs;
  }
  std::set<std::string> motif_tokens;
  for (const auto &m : out.motifs)
    motif_tokens.insert(m.begin(), m.end());
  for (const auto &t : alphabet)
    if (!motif_tokens.count(t))
      out.noise_alphabet.push_back(t);
  if (out.noise_alphabet.empty())
    throw std::invalid_argument("synthetic: no noise tokens left after the motifs");

  out.motif_token_counts.assign(spec.num_classes, {});
  std::uniform_int_distribution<std::size_t> len_dist(spec.min_length, spec.max_length);
  std::uniform_int_distribution<std::size_t> class_dist(0, spec.num_classes - 1);
  std::uniform_int_distribution<std::size_t> noise_dist(0, out.noise_alphabet.size() - 1);
  std::bernoulli_distribution insert(spec.insert_probability);

  std::vector<std::vector<std::string>> docs;
  std::vector<int> labels;
  for (std::size_t n = 0; n < n_sequences; ++n) {
    const std::size_t c = class_dist(rng);
    const std::size_t len = len_dist(rng);
    std::vector<std::string> words(len);
    for (auto &w : words)
      w = out.noise_alphabet[noise_dist(rng)];
    const bool planted = insert(rng);
    if (planted) {
      std::vector<std::size_t> pos(len);
      std::iota(pos.begin(), pos.end(), 0);
      std::shuffle(pos.begin(), pos.end(), rng);
      pos.resize(spec.motif_length);
      std::sort(pos.begin(), pos.end());
      for (std::size_t i = 0; i < spec.motif_length; ++i) {
        words[pos[i]] = out.motifs[c][i];
        ++out.motif_token_counts[c][out.motifs[c][i]];
      }
    }
    out.has_motif.push_back(planted);
    docs.push_back(std::move(words));
    labels.push_back(static_cast<int>(c));
  }

  Dataset &d = out.data;
  d.kind = StepKind::Token;
  d.mode = TaskMode::Multiclass;
  d.num_classes = spec.num_classes;
  for (std::size_t c = 0; c < spec.num_classes; ++c)
    d.class_names.push_back("class" + std::to_string(c + 1));
  d.vocab = Vocabulary::build(docs);
  for (std::size_t i = 0; i < docs.size(); ++i)
    d.sequences.push_back(Sequence::from_tokens(d.vocab.encode(docs[i]), {labels[i]}));
  assign_splits(d, spec.train_fraction, spec.val_fraction, spec.seed + 1);
  return out;
}

} // namespace protoseq
