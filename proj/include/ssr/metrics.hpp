#pragma once

#include <cstdint>
#include <span>

namespace ssr {

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Rank statistic, O(n log n). Throws MetricError when a
/// class is missing.
double evaluate_auc(std::span<const double> scores, std::span<const double> labels);

/// Per-user AUC averaged with per-user sample counts as weights; users with a
/// single class are skipped. Throws MetricError when no user qualifies.
double evaluate_gauc(std::span<const double> scores, std::span<const double> labels,
                     std::span<const std::uint64_t> users);

/// Mean negative log-likelihood with probabilities clamped to [1e-12, 1 - 1e-12].
double evaluate_logloss(std::span<const double> probabilities, std::span<const double> labels);

}  // namespace ssr
