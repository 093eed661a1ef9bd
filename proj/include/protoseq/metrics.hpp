// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "protoseq/sequence.hpp"

namespace protoseq {

struct MetricSet {
  TaskMode mode = TaskMode::Multiclass;
  std::size_t examples = 0;  // examples that entered the averages
  double accuracy = 0.0;     // multiclass
  double recall_at_5 = 0.0;  // multilabel
  double map_at_5 = 0.0;     // multilabel
  std::size_t skipped_empty_truth = 0;
};

/// Recall@K for one example: |top-K ∩ truth| / |truth|.
double recall_at_k(const std::vector<double> &scores, const std::vector<int> &truth, std::size_t k);

/// Truncated average precision: sum over hit ranks j <= K of precision@j,
/// divided by min(|truth|, K).
double average_precision_at_k(const std::vector<double> &scores, const std::vector<int> &truth,
                              std::size_t k);

/// Multiclass: accuracy of argmax. Multilabel: mean Recall@5 and MAP@5;
/// examples with an empty truth set are skipped and counted.
MetricSet evaluate_metrics(const std::vector<std::vector<double>> &scores,
                           const std::vector<std::vector<int>> &truth, TaskMode mode);

} // namespace protoseq
