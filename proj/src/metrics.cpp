// SPDX-License-Identifier: Apache-2.0
#include "protoseq/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace protoseq {

namespace {

// Class indices by descending score, lowest index first on ties.
std::vector<int> ranking(const std::vector<double> &scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[static_cast<std::size_t>(a)] >
                                              scores[static_cast<std::size_t>(b)]; });
  return order;
}

bool contains(const std::vector<int> &v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

} // namespace

double recall_at_k(const std::vector<double> &scores, const std::vector<int> &truth, std::size_t k) {
  if (truth.empty())
    throw std::invalid_argument("recall_at_k: empty truth set");
  const auto order = ranking(scores);
  std::size_t hits = 0;
  for (std::size_t j = 0; j < std::min(k, order.size()); ++j)
    hits += contains(truth, order[j]);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double average_precision_at_k(const std::vector<double> &scores, const std::vector<int> &truth,
                              std::size_t k) {
  if (truth.empty())
    throw std::invalid_argument("average_precision_at_k: empty truth set");
  const auto order = ranking(scores);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t j = 0; j < std::min(k, order.size()); ++j)
    if (contains(truth, order[j])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(j + 1);
    }
  return sum / static_cast<double>(std::min(truth.size(), k));
}

MetricSet evaluate_metrics(const std::vector<std::vector<double>> &scores,
                           const std::vector<std::vector<int>> &truth, TaskMode mode) {
  if (scores.size() != truth.size())
    throw std::invalid_argument("evaluate_metrics: " + std::to_string(scores.size()) +
                                " predictions for " + std::to_string(truth.size()) + " examples");
  MetricSet m;
  m.mode = mode;
  if (mode == TaskMode::Multiclass) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (truth[i].size() != 1)
        throw std::invalid_argument("multiclass example needs exactly one label");
      const auto pred = std::distance(scores[i].begin(),
                                      std::max_element(scores[i].begin(), scores[i].end()));
      correct += pred == truth[i][0];
    }
    m.examples = scores.size();
    m.accuracy = m.examples ? static_cast<double>(correct) / static_cast<double>(m.examples) : 0.0;
    return m;
  }
  double rec = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truth[i].empty()) {
      ++m.skipped_empty_truth;
      continue;
    }
    rec += recall_at_k(scores[i], truth[i], 5);
    ap += average_precision_at_k(scores[i], truth[i], 5);
    ++m.examples;
  }
  if (m.examples) {
    m.recall_at_5 = rec / static_cast<double>(m.examples);
    m.map_at_5 = ap / static_cast<double>(m.examples);
  }
  return m;
}

} // namespace protoseq
