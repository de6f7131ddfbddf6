#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "onn/gradcheck.hpp"
#include "onn/modelzoo.hpp"

namespace onn {

/// A small random instance for checking a model's hand-written backward
/// against central differences of the batch-mean log loss.
struct ModelCheckSetup {
  ModelKind kind = ModelKind::ONN;
  ProductVariant variant = ProductVariant::Inner;
  std::size_t fields = 5;
  std::size_t max_cardinality = 8;
  std::size_t dim = 4;
  std::vector<std::size_t> hidden{8, 8};
  std::size_t batch = 8;
  double epsilon = 1e-5;
  // Large enough that products and BN inputs are far from degenerate.
  double init_scale = 0.5;
  bool shallow_terms = true;
  std::uint64_t seed = 7;
};

struct ModelCheckInstance {
  ModelGraph graph;
  std::vector<Sample> samples;
  Batch batch;
};

ModelCheckInstance make_check_instance(const ModelCheckSetup& setup);

// Runs backward through `backward_override` when set, so tests can plant a defect.
GradCheckReport check_model_gradients(
    ModelCheckInstance& instance, double epsilon,
    const std::function<void(ModelGraph&, const Batch&)>& backward_override = {});

GradCheckReport run_model_gradcheck(const ModelCheckSetup& setup);

}  // namespace onn
