#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "onn/numerics.hpp"

namespace onn {

class GradCheckError : public std::runtime_error {
 public:
  GradCheckError(std::string parameter, std::size_t index, const std::string& what)
      : std::runtime_error(what), parameter_(std::move(parameter)), index_(index) {}

  const std::string& parameter() const { return parameter_; }
  std::size_t index() const { return index_; }

 private:
  std::string parameter_;
  std::size_t index_;
};

/// Central-difference estimate (loss(θ+ε) − loss(θ−ε)) / 2ε for every scalar in
/// `params`. Each entry is restored bit-exactly after probing, so the store is
/// unchanged on return. The result mirrors `params` one matrix per parameter.
/// Throws GradCheckError naming the parameter and flat index when a probe
/// yields a non-finite loss.
std::vector<DenseMatrix> finite_diff_gradient(const std::function<double()>& loss, const ParamList& params,
                                              double epsilon);

// Same oracle for a plain function of a vector.
std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& loss,
                                         std::vector<double> point, double epsilon);

struct GroupError {
  std::string name;
  std::size_t count = 0;
  double max_abs_error = 0.0;
  // Largest |analytic| or |numeric| entry in the group.
  double scale = 0.0;
  // max_abs_error / max(scale, floor).
  double relative_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;

  double max_relative_error() const;
  bool passed(double tolerance) const { return max_relative_error() < tolerance; }
};

/// Compares the analytic gradients held in each Parameter::grad against
/// numeric estimates. The error of a group is its worst absolute deviation
/// scaled by the group's gradient magnitude, which stays meaningful for
/// entries whose true gradient is zero or near zero. The floor keeps groups
/// whose gradient vanishes identically (e.g. a bias feeding straight into
/// batch norm) from dividing central-difference roundoff, ~1e-11 at
/// epsilon 1e-5, by a near-zero scale.
inline constexpr double kGradScaleFloor = 1e-6;
GradCheckReport compare_gradients(const ParamList& params, const std::vector<DenseMatrix>& numeric,
                                  double scale_floor = kGradScaleFloor);

}  // namespace onn
