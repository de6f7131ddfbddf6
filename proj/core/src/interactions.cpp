#include "onn/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "onn/errors.hpp"

namespace onn {

namespace {

// Outer kernels start at the identity, where the bilinear form equals the inner
// product, plus this much uniform noise.
constexpr double kOuterKernelNoise = 0.01;

void glorot_uniform(DenseMatrix& w, std::size_t fan_in, std::size_t fan_out, SeededRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.flat()) v = rng.uniform(-limit, limit);
}

std::string pair_name(const FieldPair& p) { return std::to_string(p.first) + "_" + std::to_string(p.second); }

}  // namespace

std::vector<FieldPair> all_pairs(std::size_t field_count) {
  std::vector<FieldPair> pairs;
  if (field_count < 2) return pairs;
  pairs.reserve(field_count * (field_count - 1) / 2);
  for (std::size_t i = 0; i + 1 < field_count; ++i) {
    for (std::size_t j = i + 1; j < field_count; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

InteractionConfig InteractionConfig::make(std::size_t field_count, ProductVariant variant, std::size_t subnet_width) {
  return {variant, subnet_width, all_pairs(field_count)};
}

DenseVector copy_op(std::span<const double> e) { return DenseVector(std::vector<double>(e.begin(), e.end())); }

double inner_product(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ConfigError("inner_product: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  return dot(a, b);
}

void inner_product_backward(std::span<const double> a, std::span<const double> b, double g, std::span<double> ga,
                            std::span<double> gb) {
  axpy(g, b, ga);
  axpy(g, a, gb);
}

double outer_product(std::span<const double> a, std::span<const double> b, const DenseMatrix& kernel) {
  if (kernel.rows() != a.size() || kernel.cols() != b.size()) {
    throw ConfigError("outer_product: kernel is " + std::to_string(kernel.rows()) + "x" +
                      std::to_string(kernel.cols()) + " for vectors of length " + std::to_string(a.size()) +
                      " and " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) s += a[r] * dot(kernel.row(r), b);
  return s;
}

void outer_product_backward(std::span<const double> a, std::span<const double> b, const DenseMatrix& kernel, double g,
                            std::span<double> ga, std::span<double> gb, DenseMatrix& gkernel) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    auto w = kernel.row(r);
    ga[r] += g * dot(w, b);
    axpy(g * a[r], w, gb);
    axpy(g * a[r], b, gkernel.row(r));
  }
}

SubnetParams::SubnetParams(const std::string& prefix, std::size_t width, std::size_t input_dim)
    : hidden_w(prefix + "/hidden_w", width, 2 * input_dim),
      hidden_b(prefix + "/hidden_b", 1, width),
      out_w(prefix + "/out_w", 1, width),
      out_b(prefix + "/out_b", 1, 1) {}

namespace {

void check_subnet_shapes(std::span<const double> a, std::span<const double> b, const SubnetParams& p) {
  if (a.size() != b.size() || p.hidden_w.value.cols() != a.size() + b.size() || p.width() == 0 ||
      p.hidden_b.value.cols() != p.width() || p.out_w.value.cols() != p.width()) {
    throw ConfigError("subnet_op: parameter shapes do not match inputs of length " + std::to_string(a.size()));
  }
}

// z = W_h [a; b] + b_h
void subnet_preactivation(std::span<const double> a, std::span<const double> b, const SubnetParams& p,
                          std::vector<double>& z) {
  const std::size_t d = a.size();
  z.assign(p.width(), 0.0);
  for (std::size_t u = 0; u < p.width(); ++u) {
    auto w = p.hidden_w.value.row(u);
    z[u] = dot(w.subspan(0, d), a) + dot(w.subspan(d, d), b) + p.hidden_b.value(0, u);
  }
}

}  // namespace

double subnet_op(std::span<const double> a, std::span<const double> b, const SubnetParams& params) {
  check_subnet_shapes(a, b, params);
  std::vector<double> z;
  subnet_preactivation(a, b, params, z);
  double out = params.out_b.value(0, 0);
  for (std::size_t u = 0; u < z.size(); ++u) out += params.out_w.value(0, u) * std::max(0.0, z[u]);
  return out;
}

void subnet_backward(std::span<const double> a, std::span<const double> b, SubnetParams& params, double g,
                     std::span<double> ga, std::span<double> gb) {
  check_subnet_shapes(a, b, params);
  const std::size_t d = a.size();
  std::vector<double> z;
  subnet_preactivation(a, b, params, z);
  params.out_b.grad(0, 0) += g;
  for (std::size_t u = 0; u < z.size(); ++u) {
    if (z[u] <= 0.0) continue;
    params.out_w.grad(0, u) += g * z[u];
    const double dz = g * params.out_w.value(0, u);
    params.hidden_b.grad(0, u) += dz;
    auto w = params.hidden_w.value.row(u);
    auto gw = params.hidden_w.grad.row(u);
    axpy(dz, a, gw.subspan(0, d));
    axpy(dz, b, gw.subspan(d, d));
    axpy(dz, w.subspan(0, d), ga);
    axpy(dz, w.subspan(d, d), gb);
  }
}

InteractionLayer::InteractionLayer(const OperationMap& map, const EmbeddingDims& dims, InteractionConfig config,
                                   SeededRng& rng)
    : config_(std::move(config)) {
  validate_dims(map, dims);
  const std::size_t m = map.field_count();
  if (map.has_copy()) {
    copy_offsets_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      copy_offsets_[i] = copy_width_;
      copy_width_ += dims[i][map.copy_slot(i)];
    }
  }
  if (!map.has_products()) {
    if (!config_.pairs.empty()) throw ConfigError("interaction pairs given for a model without product operations");
    return;
  }
  if (config_.pairs.size() != m * (m - 1) / 2) {
    throw ConfigError("interaction pair list must hold all " + std::to_string(m * (m - 1) / 2) + " field pairs");
  }
  for (const auto& [i, j] : config_.pairs) {
    if (i >= j || j >= m) throw ConfigError("interaction pairs must satisfy i < j < m");
  }
  for (const auto& p : config_.pairs) {
    const std::size_t d = dims[p.first][map.product_slot(p.first, p.second)];
    switch (config_.variant) {
      case ProductVariant::Inner:
        break;
      case ProductVariant::Outer:
      case ProductVariant::InnerOuter: {
        Parameter& k = outer_kernels_.emplace_back("outer/" + pair_name(p) + "/kernel", d, d);
        for (std::size_t r = 0; r < d; ++r) {
          for (std::size_t c = 0; c < d; ++c) {
            k.value(r, c) = (r == c ? 1.0 : 0.0) + rng.uniform(-kOuterKernelNoise, kOuterKernelNoise);
          }
        }
        break;
      }
      case ProductVariant::Subnet: {
        const std::size_t h = config_.subnet_width == 0 ? d : config_.subnet_width;
        SubnetParams& s = subnets_.emplace_back("subnet/" + pair_name(p), h, d);
        glorot_uniform(s.hidden_w.value, 2 * d, h, rng);
        glorot_uniform(s.out_w.value, h, 1, rng);
        break;
      }
    }
  }
}

void InteractionLayer::write_row(const Sample& sample, const EmbeddingBank& bank, const OperationMap& map,
                                 std::span<double> out) const {
  const auto& x = sample.field_values;
  if (!copy_offsets_.empty()) {
    for (std::size_t i = 0; i < copy_offsets_.size(); ++i) {
      auto e = bank.row(i, map.copy_slot(i), x[i]);
      std::copy(e.begin(), e.end(), out.begin() + static_cast<std::ptrdiff_t>(copy_offsets_[i]));
    }
  }
  std::size_t pos = copy_width_;
  for (std::size_t n = 0; n < config_.pairs.size(); ++n) {
    const auto [i, j] = config_.pairs[n];
    auto ei = bank.row(i, map.product_slot(i, j), x[i]);
    auto ej = bank.row(j, map.product_slot(j, i), x[j]);
    switch (config_.variant) {
      case ProductVariant::Inner:
        out[pos++] = inner_product(ei, ej);
        break;
      case ProductVariant::Outer:
        out[pos++] = outer_product(ei, ej, outer_kernels_[n].value);
        break;
      case ProductVariant::Subnet:
        out[pos++] = subnet_op(ei, ej, subnets_[n]);
        break;
      case ProductVariant::InnerOuter:
        out[pos++] = inner_product(ei, ej);
        out[pos++] = outer_product(ei, ej, outer_kernels_[n].value);
        break;
    }
  }
}

MedialFeatures InteractionLayer::assemble(const Sample& sample, const EmbeddingBank& bank,
                                          const OperationMap& map) const {
  if (sample.field_values.size() != map.field_count()) throw ConfigError("sample does not match the schema");
  DenseVector f(output_width());
  write_row(sample, bank, map, f.span());
  MedialFeatures out;
  out.e_f = DenseVector(std::vector<double>(f.values().begin(), f.values().begin() + copy_width_));
  out.i_f = DenseVector(std::vector<double>(f.values().begin() + copy_width_, f.values().end()));
  out.f = std::move(f);
  return out;
}

DenseMatrix InteractionLayer::compute(const Batch& batch, const EmbeddingBank& bank, const OperationMap& map) const {
  DenseMatrix out(batch.size(), output_width());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch.samples[b]->field_values.size() != map.field_count()) {
      throw ConfigError("sample does not match the schema");
    }
    write_row(*batch.samples[b], bank, map, out.row(b));
  }
  return out;
}

DenseMatrix InteractionLayer::forward(const Batch& batch, const EmbeddingBank& bank, const OperationMap& map) {
  DenseMatrix out = compute(batch, bank, map);
  cached_ = batch.samples;
  return out;
}

void InteractionLayer::backward(const DenseMatrix& grad_f, EmbeddingBank& bank, const OperationMap& map) {
  if (grad_f.rows() != cached_.size() || grad_f.cols() != output_width()) {
    throw ConfigError("interaction backward: gradient shape does not match the last forward batch");
  }
  std::vector<double> ga, gb;
  for (std::size_t b = 0; b < cached_.size(); ++b) {
    const auto& x = cached_[b]->field_values;
    auto g = grad_f.row(b);
    if (!copy_offsets_.empty()) {
      for (std::size_t i = 0; i < copy_offsets_.size(); ++i) {
        const std::size_t k = map.copy_slot(i);
        bank.accumulate(i, k, x[i], g.subspan(copy_offsets_[i], bank.dim(i, k)));
      }
    }
    std::size_t pos = copy_width_;
    for (std::size_t n = 0; n < config_.pairs.size(); ++n) {
      const auto [i, j] = config_.pairs[n];
      const std::size_t ki = map.product_slot(i, j);
      const std::size_t kj = map.product_slot(j, i);
      auto ei = bank.row(i, ki, x[i]);
      auto ej = bank.row(j, kj, x[j]);
      ga.assign(ei.size(), 0.0);
      gb.assign(ej.size(), 0.0);
      switch (config_.variant) {
        case ProductVariant::Inner:
          inner_product_backward(ei, ej, g[pos++], ga, gb);
          break;
        case ProductVariant::Outer:
          outer_product_backward(ei, ej, outer_kernels_[n].value, g[pos++], ga, gb, outer_kernels_[n].grad);
          break;
        case ProductVariant::Subnet:
          subnet_backward(ei, ej, subnets_[n], g[pos++], ga, gb);
          break;
        case ProductVariant::InnerOuter:
          inner_product_backward(ei, ej, g[pos++], ga, gb);
          outer_product_backward(ei, ej, outer_kernels_[n].value, g[pos++], ga, gb, outer_kernels_[n].grad);
          break;
      }
      bank.accumulate(i, ki, x[i], ga);
      bank.accumulate(j, kj, x[j], gb);
    }
  }
}

void InteractionLayer::collect(ParamList& out) {
  for (auto& k : outer_kernels_) out.push_back(&k);
  for (auto& s : subnets_) {
    out.push_back(&s.hidden_w);
    out.push_back(&s.hidden_b);
    out.push_back(&s.out_w);
    out.push_back(&s.out_b);
  }
}

MedialFeatures assemble_medial(const Sample& sample, const EmbeddingBank& bank, const OperationMap& map,
                               const InteractionLayer& layer) {
  return layer.assemble(sample, bank, map);
}

}  // namespace onn
