#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "onn/numerics.hpp"

namespace onn {

enum class Mode { Train, Infer };

struct BatchNormState {
  Parameter gamma;  // 1 x units
  Parameter beta;   // 1 x units
  DenseMatrix running_mean;
  DenseMatrix running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;
};

/// Per-unit batch normalization. Train mode normalizes with the batch's own
/// mean and population variance and folds them into the running statistics;
/// infer mode uses the running statistics only.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(const std::string& prefix, std::size_t units, double momentum = 0.9, double epsilon = 1e-5);

  std::size_t units() const { return state_.gamma.value.cols(); }
  BatchNormState& state() { return state_; }
  const BatchNormState& state() const { return state_; }

  // A single-row batch in train mode is normalized with the running statistics.
  DenseMatrix forward(const DenseMatrix& x, Mode mode);
  DenseMatrix infer(const DenseMatrix& x) const;
  // Full Jacobian in train mode, including the batch statistics' dependence on x.
  DenseMatrix backward(const DenseMatrix& dy);

  void collect(ParamList& out);
  void buffers(std::vector<NamedBuffer>& out, const std::string& prefix);

 private:
  BatchNormState state_;
  Mode last_mode_ = Mode::Infer;
  DenseMatrix xhat_;
  std::vector<double> inv_std_;
};

DenseMatrix batchnorm(const DenseMatrix& x, BatchNorm& bn, Mode mode);

/// Inverted dropout: in train mode each unit is zeroed with probability `rate`
/// and survivors are scaled by 1/(1-rate); infer mode is the identity.
class Dropout {
 public:
  explicit Dropout(double rate = 0.0);

  double rate() const { return rate_; }
  DenseMatrix forward(const DenseMatrix& x, Mode mode, SeededRng* rng);
  DenseMatrix backward(const DenseMatrix& dy) const;

 private:
  double rate_;
  bool active_ = false;
  DenseMatrix mask_;
};

DenseMatrix dropout(const DenseMatrix& x, double rate, SeededRng& rng, Mode mode);

// Overflow-free logistic function.
double sigmoid(double x);
// σ(l·w_out + b_out) per row of `l`.
std::vector<double> output_head(const DenseMatrix& l, const DenseMatrix& w_out, double b_out);

struct MlpConfig {
  std::vector<std::size_t> hidden{400, 400, 400};
  bool batch_norm = true;
  double dropout = 0.0;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
};

/// BN on the input, then per layer BN(relu(W x + b)) with optional dropout,
/// then a single sigmoid output unit (this class returns its logit).
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t input_width, const MlpConfig& config, SeededRng& rng);

  std::size_t input_width() const { return input_width_; }
  std::size_t depth() const { return layers_.size(); }
  const MlpConfig& config() const { return config_; }

  // Caches everything backward needs. `rng` is required when dropout is active in train mode.
  std::vector<double> forward(const DenseMatrix& x, Mode mode, SeededRng* rng);
  // Read-only inference path.
  std::vector<double> infer(const DenseMatrix& x) const;
  // dL/dx given dL/dlogit per row; accumulates parameter gradients.
  DenseMatrix backward(std::span<const double> dlogits);

  // Output of hidden layer `layer` for `input` (the previous layer's output).
  DenseMatrix hidden_forward(const DenseMatrix& input, std::size_t layer, Mode mode, SeededRng* rng);

  struct Layer {
    Parameter weight;  // out x in
    Parameter bias;    // 1 x out
    std::optional<BatchNorm> bn;
    Dropout drop;
    DenseMatrix input;
    DenseMatrix pre;
  };

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::optional<BatchNorm>& input_bn() { return input_bn_; }
  Parameter& head_weight() { return head_w_; }
  Parameter& head_bias() { return head_b_; }

  void collect(ParamList& out);
  void buffers(std::vector<NamedBuffer>& out);

 private:
  std::size_t input_width_ = 0;
  MlpConfig config_;
  std::optional<BatchNorm> input_bn_;
  std::vector<Layer> layers_;
  Parameter head_w_;  // 1 x last width
  Parameter head_b_;  // 1 x 1
  DenseMatrix head_input_;
};

}  // namespace onn
