#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "onn/datapipe.hpp"
#include "onn/embedding.hpp"
#include "onn/numerics.hpp"

namespace onn {

using FieldPair = std::pair<std::size_t, std::size_t>;

// (0,1), (0,2), ..., (m-2, m-1).
std::vector<FieldPair> all_pairs(std::size_t field_count);

struct InteractionConfig {
  ProductVariant variant = ProductVariant::Inner;
  // Hidden units of the per-pair sub-network; 0 means "use the pair's embedding width".
  std::size_t subnet_width = 0;
  std::vector<FieldPair> pairs;

  static InteractionConfig make(std::size_t field_count, ProductVariant variant, std::size_t subnet_width = 0);
  std::size_t scalars_per_pair() const { return variant == ProductVariant::InnerOuter ? 2 : 1; }
};

// The copy operation: identity forward, identity Jacobian backward.
DenseVector copy_op(std::span<const double> e);

double inner_product(std::span<const double> a, std::span<const double> b);
// ga += g·b, gb += g·a
void inner_product_backward(std::span<const double> a, std::span<const double> b, double g, std::span<double> ga,
                            std::span<double> gb);

/// Bilinear form Σ_ab W[a,b]·x[a]·y[b] over the outer product x yᵀ.
double outer_product(std::span<const double> a, std::span<const double> b, const DenseMatrix& kernel);
void outer_product_backward(std::span<const double> a, std::span<const double> b, const DenseMatrix& kernel, double g,
                            std::span<double> ga, std::span<double> gb, DenseMatrix& gkernel);

/// One-hidden-layer network on [a; b]: w_o · relu(W_h [a; b] + b_h) + b_o.
struct SubnetParams {
  Parameter hidden_w;  // h x 2d
  Parameter hidden_b;  // 1 x h
  Parameter out_w;     // 1 x h
  Parameter out_b;     // 1 x 1

  SubnetParams() = default;
  SubnetParams(const std::string& prefix, std::size_t width, std::size_t input_dim);
  std::size_t width() const { return hidden_w.value.rows(); }
};

double subnet_op(std::span<const double> a, std::span<const double> b, const SubnetParams& params);
// Accumulates into ga, gb and the grad fields of `params`.
void subnet_backward(std::span<const double> a, std::span<const double> b, SubnetParams& params, double g,
                     std::span<double> ga, std::span<double> gb);

/// f = [e_f, i_f] for one sample.
struct MedialFeatures {
  DenseVector e_f;
  DenseVector i_f;
  DenseVector f;
};

/// The incipient feature extraction layer: copy lookups followed by one (or
/// two, for inner+outer) scalar per field pair. Owns the per-pair trainable
/// parameters of the outer and subnet variants.
class InteractionLayer {
 public:
  InteractionLayer() = default;
  InteractionLayer(const OperationMap& map, const EmbeddingDims& dims, InteractionConfig config, SeededRng& rng);

  const InteractionConfig& config() const { return config_; }
  std::size_t copy_width() const { return copy_width_; }
  std::size_t interaction_width() const { return config_.pairs.size() * config_.scalars_per_pair(); }
  std::size_t output_width() const { return copy_width_ + interaction_width(); }

  MedialFeatures assemble(const Sample& sample, const EmbeddingBank& bank, const OperationMap& map) const;

  // One row of f per sample, without touching any cached state.
  DenseMatrix compute(const Batch& batch, const EmbeddingBank& bank, const OperationMap& map) const;
  // As compute, and keeps the batch for backward.
  DenseMatrix forward(const Batch& batch, const EmbeddingBank& bank, const OperationMap& map);
  // Routes dL/df into embedding rows and pair parameters.
  void backward(const DenseMatrix& grad_f, EmbeddingBank& bank, const OperationMap& map);

  // Per-pair parameters, indexed like config().pairs; empty for other variants.
  std::vector<Parameter>& outer_kernels() { return outer_kernels_; }
  const std::vector<Parameter>& outer_kernels() const { return outer_kernels_; }
  std::vector<SubnetParams>& subnets() { return subnets_; }
  const std::vector<SubnetParams>& subnets() const { return subnets_; }

  void collect(ParamList& out);

 private:
  InteractionConfig config_;
  std::vector<std::size_t> copy_offsets_;
  std::size_t copy_width_ = 0;
  std::vector<Parameter> outer_kernels_;
  std::vector<SubnetParams> subnets_;
  std::vector<const Sample*> cached_;

  void write_row(const Sample& sample, const EmbeddingBank& bank, const OperationMap& map,
                 std::span<double> out) const;
};

MedialFeatures assemble_medial(const Sample& sample, const EmbeddingBank& bank, const OperationMap& map,
                               const InteractionLayer& layer);

}  // namespace onn
