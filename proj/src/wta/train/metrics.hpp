#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wta/nn/tensor.hpp"

namespace wta::train {

// Mean absolute error over every entry.
double mae(const nn::Tensor2& predictions, const nn::Tensor2& targets);

// Targets at or above 0.5 become positives.
inline constexpr double kDichotomizeThreshold = 0.5;
std::vector<int> dichotomize(std::span<const double> targets);

// Area under the ROC curve as the normalized Mann-Whitney statistic with
// average ranks for ties. Throws when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);
std::optional<double> try_auc(std::span<const double> scores, std::span<const int> labels);

// AUC of column `task` of `predictions` against dichotomized targets.
std::optional<double> task_auc(const nn::Tensor2& predictions, const nn::Tensor2& targets,
                               std::size_t task);

}  // namespace wta::train
