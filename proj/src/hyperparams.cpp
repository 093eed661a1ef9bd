// SPDX-License-Identifier: Apache-2.0
#include "protoseq/hyperparams.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace protoseq {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string &key, const std::string &v) {
  double out = 0.0;
  const auto *end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || !std::isfinite(out))
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

std::size_t parse_size(const std::string &key, const std::string &v) {
  std::size_t out = 0;
  const auto *end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" +
                                v + "'");
  return out;
}

bool parse_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + v + "'");
}

struct Field {
  const char *key;
  std::function<std::string(const Hyperparams &)> get;
  std::function<void(Hyperparams &, const std::string &)> set;
};

#define REAL(name)                                                                                 \
  Field{#name, [](const Hyperparams &h) { return fmt_double(h.name); },                            \
        [](Hyperparams &h, const std::string &v) { h.name = parse_double(#name, v); }}
#define SIZE(name)                                                                                 \
  Field{#name, [](const Hyperparams &h) { return std::to_string(h.name); },                        \
        [](Hyperparams &h, const std::string &v) { h.name = parse_size(#name, v); }}
#define BOOL(name)                                                                                 \
  Field{#name, [](const Hyperparams &h) { return std::string(h.name ? "true" : "false"); },        \
        [](Hyperparams &h, const std::string &v) { h.name = parse_bool(#name, v); }}

const std::vector<Field> &fields() {
  static const std::vector<Field> table = {
      SIZE(prototypes),
      REAL(lambda_c),
      REAL(lambda_e),
      REAL(lambda_d),
      REAL(lambda_l1),
      REAL(d_min),
      SIZE(beam_width),
      REAL(length_penalty),
      BOOL(simplify),
      SIZE(projection_every),
      REAL(lr),
      REAL(lr_decay),
      SIZE(lr_decay_after),
      REAL(clip_norm),
      SIZE(batch_size),
      SIZE(epochs),
      Field{"cell", [](const Hyperparams &h) { return std::string(cell_kind_name(h.cell)); },
            [](Hyperparams &h, const std::string &v) { h.cell = parse_cell_kind(v); }},
      BOOL(bidirectional),
      SIZE(layers),
      SIZE(hidden),
      SIZE(embedding_dim),
      SIZE(projection_dim),
      REAL(dropout),
  };
  return table;
}

#undef REAL
#undef SIZE
#undef BOOL

} // namespace

void Hyperparams::validate() const {
  const auto need = [](bool ok, const char *what) {
    if (!ok)
      throw std::invalid_argument(std::string("invalid hyperparameter: ") + what);
  };
  need(prototypes >= 1, "prototypes must be >= 1");
  need(lambda_c >= 0 && lambda_e >= 0 && lambda_d >= 0 && lambda_l1 >= 0,
       "regularization weights must be >= 0");
  need(d_min > 0, "d_min must be > 0");
  need(beam_width >= 1, "beam_width must be >= 1");
  need(length_penalty >= 0, "length_penalty must be >= 0");
  need(projection_every >= 1, "projection_every must be >= 1");
  need(lr > 0 && lr_decay > 0, "lr and lr_decay must be > 0");
  need(clip_norm > 0, "clip_norm must be > 0");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(layers >= 1 && hidden >= 1, "layers and hidden must be >= 1");
  need(embedding_dim >= 1, "embedding_dim must be >= 1");
  need(dropout >= 0 && dropout < 1, "dropout must be in [0, 1)");
}

double Hyperparams::learning_rate(std::size_t epoch) const {
  if (epoch <= lr_decay_after)
    return lr;
  return lr * std::pow(lr_decay, static_cast<double>(epoch - lr_decay_after));
}

std::map<std::string, std::string> to_key_values(const Hyperparams &hp) {
  std::map<std::string, std::string> kv;
  for (const auto &f : fields())
    kv.emplace(f.key, f.get(hp));
  return kv;
}

Hyperparams hyperparams_from_key_values(const std::map<std::string, std::string> &kv) {
  Hyperparams hp;
  for (const auto &[key, value] : kv) {
    bool known = false;
    for (const auto &f : fields())
      if (key == f.key) {
        f.set(hp, value);
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("unknown config key '" + key + "'");
  }
  hp.validate();
  return hp;
}

std::map<std::string, std::string> parse_key_value_text(const std::string &text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": duplicate key '" + key +
                                  "'");
  }
  return kv;
}

std::map<std::string, std::string> read_key_value_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_key_value_text(ss.str());
  } catch (const std::invalid_argument &e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string format_key_values(const std::map<std::string, std::string> &kv) {
  std::string out;
  for (const auto &[k, v] : kv)
    out += k + " = " + v + "\n";
  return out;
}

Hyperparams load_hyperparams(const std::string &path) {
  return hyperparams_from_key_values(read_key_value_file(path));
}

void save_hyperparams(const Hyperparams &hp, const std::string &path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write config '" + path + "'");
  out << format_key_values(to_key_values(hp));
}

} // namespace protoseq
