#include "onn/deepnet.hpp"

#include <algorithm>
#include <cmath>

#include "onn/errors.hpp"

namespace onn {

namespace {

void glorot_uniform(DenseMatrix& w, SeededRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (double& v : w.flat()) v = rng.uniform(-limit, limit);
}

}  // namespace

BatchNorm::BatchNorm(const std::string& prefix, std::size_t units, double momentum, double epsilon) {
  if (!(momentum > 0.0 && momentum < 1.0)) throw ConfigError("batch norm momentum must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("batch norm epsilon must be positive");
  state_.gamma = Parameter(prefix + "/gamma", 1, units, 1.0);
  state_.beta = Parameter(prefix + "/beta", 1, units, 0.0);
  state_.running_mean = DenseMatrix(1, units, 0.0);
  state_.running_var = DenseMatrix(1, units, 1.0);
  state_.momentum = momentum;
  state_.epsilon = epsilon;
}

DenseMatrix BatchNorm::forward(const DenseMatrix& x, Mode mode) {
  if (x.cols() != units()) throw ConfigError("batch norm: input width does not match unit count");
  const std::size_t n = x.rows();
  // A lone sample has no batch variance; it is normalized with the running
  // statistics, which are left untouched, and backward treats BN as affine.
  last_mode_ = n < 2 ? Mode::Infer : mode;
  const std::size_t units_ = units();
  inv_std_.assign(units_, 0.0);
  xhat_ = DenseMatrix(n, units_);
  if (last_mode_ == Mode::Infer) {
    for (std::size_t u = 0; u < units_; ++u) {
      inv_std_[u] = 1.0 / std::sqrt(state_.running_var(0, u) + state_.epsilon);
      for (std::size_t b = 0; b < n; ++b) xhat_(b, u) = (x(b, u) - state_.running_mean(0, u)) * inv_std_[u];
    }
    return infer(x);
  }

  DenseMatrix y(n, units_);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t u = 0; u < units_; ++u) {
    double mean = 0.0;
    for (std::size_t b = 0; b < n; ++b) mean += x(b, u);
    mean *= inv_n;
    double var = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const double c = x(b, u) - mean;
      var += c * c;
    }
    var *= inv_n;
    inv_std_[u] = 1.0 / std::sqrt(var + state_.epsilon);
    for (std::size_t b = 0; b < n; ++b) {
      xhat_(b, u) = (x(b, u) - mean) * inv_std_[u];
      y(b, u) = state_.gamma.value(0, u) * xhat_(b, u) + state_.beta.value(0, u);
    }
    const double m = state_.momentum;
    state_.running_mean(0, u) = m * state_.running_mean(0, u) + (1.0 - m) * mean;
    state_.running_var(0, u) = m * state_.running_var(0, u) + (1.0 - m) * var;
  }
  return y;
}

DenseMatrix BatchNorm::infer(const DenseMatrix& x) const {
  if (x.cols() != units()) throw ConfigError("batch norm: input width does not match unit count");
  DenseMatrix y(x.rows(), x.cols());
  for (std::size_t u = 0; u < units(); ++u) {
    const double inv_std = 1.0 / std::sqrt(state_.running_var(0, u) + state_.epsilon);
    const double scale = state_.gamma.value(0, u) * inv_std;
    const double shift = state_.beta.value(0, u) - scale * state_.running_mean(0, u);
    for (std::size_t b = 0; b < x.rows(); ++b) y(b, u) = scale * x(b, u) + shift;
  }
  return y;
}

DenseMatrix BatchNorm::backward(const DenseMatrix& dy) {
  const std::size_t n = xhat_.rows();
  if (dy.rows() != n || dy.cols() != units()) throw ConfigError("batch norm backward: shape mismatch");
  DenseMatrix dx(n, units());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t u = 0; u < units(); ++u) {
    const double gamma = state_.gamma.value(0, u);
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      sum_dy += dy(b, u);
      sum_dy_xhat += dy(b, u) * xhat_(b, u);
    }
    state_.gamma.grad(0, u) += sum_dy_xhat;
    state_.beta.grad(0, u) += sum_dy;
    if (last_mode_ == Mode::Infer) {
      for (std::size_t b = 0; b < n; ++b) dx(b, u) = dy(b, u) * gamma * inv_std_[u];
      continue;
    }
    // dx = γ/σ · (dy − mean(dy) − x̂·mean(dy·x̂))
    const double k = gamma * inv_std_[u];
    for (std::size_t b = 0; b < n; ++b) {
      dx(b, u) = k * (dy(b, u) - inv_n * sum_dy - xhat_(b, u) * inv_n * sum_dy_xhat);
    }
  }
  return dx;
}

void BatchNorm::collect(ParamList& out) {
  out.push_back(&state_.gamma);
  out.push_back(&state_.beta);
}

void BatchNorm::buffers(std::vector<NamedBuffer>& out, const std::string& prefix) {
  out.push_back({prefix + "/running_mean", &state_.running_mean});
  out.push_back({prefix + "/running_var", &state_.running_var});
}

DenseMatrix batchnorm(const DenseMatrix& x, BatchNorm& bn, Mode mode) { return bn.forward(x, mode); }

Dropout::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

DenseMatrix Dropout::forward(const DenseMatrix& x, Mode mode, SeededRng* rng) {
  active_ = mode == Mode::Train && rate_ > 0.0;
  if (!active_) return x;
  if (rng == nullptr) throw ConfigError("dropout in train mode needs a random generator");
  mask_ = DenseMatrix(x.rows(), x.cols());
  const double keep_scale = 1.0 / (1.0 - rate_);
  DenseMatrix y(x.rows(), x.cols());
  auto m = mask_.flat();
  auto in = x.flat();
  auto out = y.flat();
  for (std::size_t k = 0; k < in.size(); ++k) {
    m[k] = rng->bernoulli(rate_) ? 0.0 : keep_scale;
    out[k] = in[k] * m[k];
  }
  return y;
}

DenseMatrix Dropout::backward(const DenseMatrix& dy) const {
  if (!active_) return dy;
  DenseMatrix dx(dy.rows(), dy.cols());
  auto m = mask_.flat();
  auto g = dy.flat();
  auto out = dx.flat();
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = g[k] * m[k];
  return dx;
}

DenseMatrix dropout(const DenseMatrix& x, double rate, SeededRng& rng, Mode mode) {
  Dropout d(rate);
  return d.forward(x, mode, &rng);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> output_head(const DenseMatrix& l, const DenseMatrix& w_out, double b_out) {
  if (w_out.rows() != 1 || w_out.cols() != l.cols()) throw ConfigError("output head: weight shape mismatch");
  std::vector<double> y(l.rows());
  for (std::size_t b = 0; b < l.rows(); ++b) y[b] = sigmoid(dot(w_out.row(0), l.row(b)) + b_out);
  return y;
}

Mlp::Mlp(std::size_t input_width, const MlpConfig& config, SeededRng& rng)
    : input_width_(input_width), config_(config) {
  if (input_width == 0) throw ConfigError("MLP input width must be positive");
  if (config.batch_norm) input_bn_.emplace("mlp/input_bn", input_width, config.bn_momentum, config.bn_epsilon);
  std::size_t in = input_width;
  for (std::size_t l = 0; l < config.hidden.size(); ++l) {
    const std::size_t out = config.hidden[l];
    if (out == 0) throw ConfigError("hidden layer widths must be positive");
    const std::string prefix = "mlp/layer" + std::to_string(l);
    Layer layer{Parameter(prefix + "/weight", out, in), Parameter(prefix + "/bias", 1, out), std::nullopt,
                Dropout(config.dropout), {}, {}};
    glorot_uniform(layer.weight.value, rng);
    if (config.batch_norm) layer.bn.emplace(prefix + "/bn", out, config.bn_momentum, config.bn_epsilon);
    layers_.push_back(std::move(layer));
    in = out;
  }
  head_w_ = Parameter("mlp/head/weight", 1, in);
  head_b_ = Parameter("mlp/head/bias", 1, 1);
  glorot_uniform(head_w_.value, rng);
}

DenseMatrix Mlp::hidden_forward(const DenseMatrix& input, std::size_t layer, Mode mode, SeededRng* rng) {
  Layer& L = layers_.at(layer);
  if (input.cols() != L.weight.value.cols()) {
    throw ConfigError("hidden layer " + std::to_string(layer) + ": expected input width " +
                      std::to_string(L.weight.value.cols()) + ", got " + std::to_string(input.cols()));
  }
  L.input = input;
  L.pre = affine_rows(input, L.weight.value, L.bias.value.row(0));
  DenseMatrix h = L.pre;
  for (double& v : h.flat()) v = std::max(0.0, v);
  if (L.bn) h = L.bn->forward(h, mode);
  return L.drop.forward(h, mode, rng);
}

std::vector<double> Mlp::forward(const DenseMatrix& x, Mode mode, SeededRng* rng) {
  if (x.cols() != input_width_) throw ConfigError("MLP: input width mismatch");
  DenseMatrix h = input_bn_ ? input_bn_->forward(x, mode) : x;
  for (std::size_t l = 0; l < layers_.size(); ++l) h = hidden_forward(h, l, mode, rng);
  head_input_ = h;
  std::vector<double> logits(h.rows());
  for (std::size_t b = 0; b < h.rows(); ++b) logits[b] = dot(head_w_.value.row(0), h.row(b)) + head_b_.value(0, 0);
  return logits;
}

std::vector<double> Mlp::infer(const DenseMatrix& x) const {
  if (x.cols() != input_width_) throw ConfigError("MLP: input width mismatch");
  DenseMatrix h = input_bn_ ? input_bn_->infer(x) : x;
  for (const Layer& L : layers_) {
    h = affine_rows(h, L.weight.value, L.bias.value.row(0));
    for (double& v : h.flat()) v = std::max(0.0, v);
    if (L.bn) h = L.bn->infer(h);
  }
  std::vector<double> logits(h.rows());
  for (std::size_t b = 0; b < h.rows(); ++b) logits[b] = dot(head_w_.value.row(0), h.row(b)) + head_b_.value(0, 0);
  return logits;
}

DenseMatrix Mlp::backward(std::span<const double> dlogits) {
  const std::size_t n = head_input_.rows();
  if (dlogits.size() != n) throw ConfigError("MLP backward: gradient length does not match the last batch");
  DenseMatrix dh(n, head_input_.cols());
  for (std::size_t b = 0; b < n; ++b) {
    const double g = dlogits[b];
    head_b_.grad(0, 0) += g;
    axpy(g, head_input_.row(b), head_w_.grad.row(0));
    axpy(g, head_w_.value.row(0), dh.row(b));
  }
  for (std::size_t l = layers_.size(); l-- > 0;) {
    Layer& L = layers_[l];
    dh = L.drop.backward(dh);
    if (L.bn) dh = L.bn->backward(dh);
    auto pre = L.pre.flat();
    auto g = dh.flat();
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (pre[k] <= 0.0) g[k] = 0.0;
    }
    accumulate_outer_tn(dh, L.input, L.weight.grad);
    for (std::size_t b = 0; b < n; ++b) axpy(1.0, dh.row(b), L.bias.grad.row(0));
    dh = matmul_nn(dh, L.weight.value);
  }
  if (input_bn_) dh = input_bn_->backward(dh);
  return dh;
}

void Mlp::collect(ParamList& out) {
  if (input_bn_) input_bn_->collect(out);
  for (auto& L : layers_) {
    out.push_back(&L.weight);
    out.push_back(&L.bias);
    if (L.bn) L.bn->collect(out);
  }
  out.push_back(&head_w_);
  out.push_back(&head_b_);
}

void Mlp::buffers(std::vector<NamedBuffer>& out) {
  if (input_bn_) input_bn_->buffers(out, "mlp/input_bn");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bn) layers_[l].bn->buffers(out, "mlp/layer" + std::to_string(l) + "/bn");
  }
}

}  // namespace onn
