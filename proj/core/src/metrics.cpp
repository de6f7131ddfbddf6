#include "onn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "onn/errors.hpp"

namespace onn {

double auc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw MetricError("auc: labels and scores differ in length");
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && scores[order[end]] == scores[order[start]]) ++end;
    // Ranks start..end-1 (0-based) share the midrank, 1-based.
    const double midrank = 0.5 * static_cast<double>(start + end + 1);
    for (std::size_t k = start; k < end; ++k) {
      if (labels[order[k]]) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    start = end;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw MetricError("auc: needs at least one positive and one negative label");
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double pearson_r(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || y.empty()) throw MetricError("pearson_r: needs two non-empty sequences of equal length");
  const double n = static_cast<double>(y.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const double mh = std::accumulate(y_hat.begin(), y_hat.end(), 0.0) / n;
  double cov = 0.0, vy = 0.0, vh = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = y[i] - my;
    const double b = y_hat[i] - mh;
    cov += a * b;
    vy += a * a;
    vh += b * b;
  }
  if (vy == 0.0 || vh == 0.0) throw MetricError("pearson_r: undefined for a constant sequence");
  return std::clamp(cov / std::sqrt(vy * vh), -1.0, 1.0);
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || y.empty()) throw MetricError("rmse: needs two non-empty sequences of equal length");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y_hat[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(y.size()));
}

double logloss(double y, double y_hat) {
  const double p = std::clamp(y_hat, kLoglossClamp, 1.0 - kLoglossClamp);
  return -y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
}

double mean_logloss(std::span<const std::uint8_t> labels, std::span<const double> probabilities) {
  if (labels.size() != probabilities.size() || labels.empty()) {
    throw MetricError("logloss: needs non-empty labels and predictions of equal length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += logloss(labels[i], probabilities[i]);
  return s / static_cast<double>(labels.size());
}

std::string EvalReport::table() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "metric      value\n"
                "logloss     %.6f\n"
                "auc         %.6f\n"
                "pearson_r   %.6f\n"
                "rmse        %.6f\n"
                "samples     %zu\n",
                logloss, auc, pearson_r, rmse, count);
  return buf;
}

std::string EvalReport::record() const {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "logloss=%.8f auc=%.8f pearson_r=%.8f rmse=%.8f n=%zu", logloss, auc, pearson_r, rmse,
                count);
  return buf;
}

EvalReport evaluate(std::span<const std::uint8_t> labels, std::span<const double> probabilities) {
  EvalReport r;
  r.count = labels.size();
  r.logloss = mean_logloss(labels, probabilities);
  r.auc = auc(labels, probabilities);
  std::vector<double> y(labels.begin(), labels.end());
  r.pearson_r = pearson_r(y, probabilities);
  r.rmse = rmse(y, probabilities);
  return r;
}

}  // namespace onn
