#include "wta/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wta/error.hpp"

namespace wta::train {

double mae(const nn::Tensor2& predictions, const nn::Tensor2& targets) {
  require(predictions.same_shape(targets), "mae: shape mismatch");
  require(!predictions.empty(), "mae: empty input");
  double s = 0.0;
  auto p = predictions.values();
  auto t = targets.values();
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - t[i]);
  return s / static_cast<double>(p.size());
}

std::vector<int> dichotomize(std::span<const double> targets) {
  std::vector<int> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i)
    out[i] = targets[i] >= kDichotomizeThreshold ? 1 : 0;
  return out;
}

std::optional<double> try_auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based) ranks of the positives, ties sharing their average rank.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] != 0) {
        rank_sum += avg_rank;
        ++positives;
      }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double np = static_cast<double>(positives), nn = static_cast<double>(negatives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  auto a = try_auc(scores, labels);
  if (!a) fail(ErrorCode::invalid_argument, "AUC is undefined when only one class is present");
  return *a;
}

std::optional<double> task_auc(const nn::Tensor2& predictions, const nn::Tensor2& targets,
                               std::size_t task) {
  require(predictions.same_shape(targets), "task_auc: shape mismatch");
  require(task < predictions.cols(), "task_auc: task index out of range");
  std::vector<double> s(predictions.rows()), t(predictions.rows());
  for (std::size_t r = 0; r < predictions.rows(); ++r) {
    s[r] = predictions(r, task);
    t[r] = targets(r, task);
  }
  return try_auc(s, dichotomize(t));
}

}  // namespace wta::train
