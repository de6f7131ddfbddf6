#include "onn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "onn/errors.hpp"

namespace onn {

std::vector<DenseMatrix> finite_diff_gradient(const std::function<double()>& loss, const ParamList& params,
                                              double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("finite_diff_gradient: epsilon must be positive");
  std::vector<DenseMatrix> out;
  out.reserve(params.size());
  for (Parameter* p : params) {
    DenseMatrix est(p->value.rows(), p->value.cols());
    auto values = p->value.flat();
    auto estimates = est.flat();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double original = values[k];
      values[k] = original + epsilon;
      const double up = loss();
      values[k] = original - epsilon;
      const double down = loss();
      values[k] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw GradCheckError(p->name, k,
                             "non-finite loss while probing " + p->name + "[" + std::to_string(k) + "]");
      }
      estimates[k] = (up - down) / (2.0 * epsilon);
    }
    out.push_back(std::move(est));
  }
  return out;
}

std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& loss,
                                         std::vector<double> point, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("finite_diff_gradient: epsilon must be positive");
  std::vector<double> grad(point.size());
  for (std::size_t k = 0; k < point.size(); ++k) {
    const double original = point[k];
    point[k] = original + epsilon;
    const double up = loss(point);
    point[k] = original - epsilon;
    const double down = loss(point);
    point[k] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw GradCheckError("x", k, "non-finite loss while probing x[" + std::to_string(k) + "]");
    }
    grad[k] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

double GradCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& g : groups) worst = std::max(worst, g.relative_error);
  return worst;
}

GradCheckReport compare_gradients(const ParamList& params, const std::vector<DenseMatrix>& numeric,
                                  double scale_floor) {
  if (params.size() != numeric.size()) throw ConfigError("compare_gradients: group count mismatch");
  GradCheckReport report;
  for (std::size_t g = 0; g < params.size(); ++g) {
    auto analytic = params[g]->grad.flat();
    auto estimate = numeric[g].flat();
    if (analytic.size() != estimate.size()) {
      throw ConfigError("compare_gradients: size mismatch in " + params[g]->name);
    }
    GroupError e;
    e.name = params[g]->name;
    e.count = analytic.size();
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      if (!std::isfinite(analytic[k])) {
        throw GradCheckError(e.name, k, "non-finite analytic gradient in " + e.name + "[" + std::to_string(k) + "]");
      }
      const double diff = std::abs(analytic[k] - estimate[k]);
      if (diff > e.max_abs_error) {
        e.max_abs_error = diff;
        e.worst_index = k;
      }
      e.scale = std::max({e.scale, std::abs(analytic[k]), std::abs(estimate[k])});
    }
    e.relative_error = e.max_abs_error / std::max(e.scale, scale_floor);
    report.groups.push_back(std::move(e));
  }
  return report;
}

}  // namespace onn
