// SPDX-License-Identifier: Apache-2.0
#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "protoseq/autodiff.hpp"
#include "protoseq/model.hpp"

namespace protoseq::testing {

/// |a - b| / max(|a| + |b|, 1e-6).
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-6, std::abs(analytic) + std::abs(numeric));
}

struct FdReport {
  double worst = 0.0;
  std::string where; // "param[index]" of the worst entry
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of `build` (which records a scalar loss
/// on a fresh tape) against central differences for every entry of `params`.
inline FdReport finite_difference_check(const std::function<ad::Var(ad::Tape &)> &build,
                                        const std::vector<ad::Parameter *> &params,
                                        double eps = 1e-5) {
  for (ad::Parameter *p : params)
    p->zero_grad();
  {
    ad::Tape tape;
    tape.backward(build(tape));
  }
  std::vector<Tensor> analytic;
  for (ad::Parameter *p : params)
    analytic.push_back(p->grad);

  const auto eval = [&] {
    ad::Tape tape;
    return build(tape).value()[0];
  };
  FdReport r;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ad::Parameter *p = params[pi];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = eval();
      p->value[i] = saved - eps;
      const double down = eval();
      p->value[i] = saved;
      const double rel = relative_error(analytic[pi][i], (up - down) / (2 * eps));
      ++r.checked;
      if (rel > r.worst) {
        r.worst = rel;
        r.where = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64 &rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(rows, cols);
  for (double &v : t.data)
    v = u(rng);
  return t;
}

inline Sequence random_tokens(std::size_t length, std::size_t vocab, std::mt19937_64 &rng) {
  std::uniform_int_distribution<std::int32_t> pick(1, static_cast<std::int32_t>(vocab) - 1);
  std::vector<std::int32_t> ids(length);
  for (auto &id : ids)
    id = pick(rng);
  return Sequence::from_tokens(std::move(ids));
}

/// Every trainable tensor of a model (encoder, P, W).
inline std::vector<ad::Parameter *> all_parameters(PrototypeModel &model) {
  std::vector<ad::Parameter *> out;
  for (auto &p : model.encoder.parameters())
    out.push_back(&p);
  out.push_back(&model.prototypes);
  out.push_back(&model.weights);
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("protoseq-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  std::string file(const std::string &name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

} // namespace protoseq::testing
