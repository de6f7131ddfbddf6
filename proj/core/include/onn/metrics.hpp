#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace onn {

// Probability that a random positive outscores a random negative, ties
// counting one half. Rank-sum with midranks, O(n log n). Throws MetricError
// unless both classes are present.
double auc(std::span<const std::uint8_t> labels, std::span<const double> scores);

// Population-moment correlation. Throws MetricError on zero variance.
double pearson_r(std::span<const double> y, std::span<const double> y_hat);

double rmse(std::span<const double> y, std::span<const double> y_hat);

// Clamped to [1e-12, 1 - 1e-12] before taking logs.
inline constexpr double kLoglossClamp = 1e-12;
double logloss(double y, double y_hat);
double mean_logloss(std::span<const std::uint8_t> labels, std::span<const double> probabilities);

struct EvalReport {
  double logloss = 0.0;
  double auc = 0.0;
  double pearson_r = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;

  // Aligned two-column table.
  std::string table() const;
  // One line: logloss=... auc=... pearson_r=... rmse=... n=...
  std::string record() const;
};

EvalReport evaluate(std::span<const std::uint8_t> labels, std::span<const double> probabilities);

}  // namespace onn
