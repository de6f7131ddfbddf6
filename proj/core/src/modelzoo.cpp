#include "onn/modelzoo.hpp"

#include <string>

#include "onn/errors.hpp"

namespace onn {

bool is_deep(ModelKind kind) { return kind == ModelKind::DNN || kind == ModelKind::PNN || kind == ModelKind::ONN; }

ModelGraph ModelGraph::build(const std::vector<std::size_t>& cardinalities, const ModelConfig& config,
                             SeededRng& rng) {
  const std::size_t m = cardinalities.size();
  if ((config.kind == ModelKind::FM || config.kind == ModelKind::FFM) && config.variant != ProductVariant::Inner) {
    throw ConfigError(std::string(to_string(config.kind)) + " is defined with the inner product only");
  }
  if (config.embed_dim == 0) throw ConfigError("embedding dimensionality must be positive");
  for (auto c : cardinalities) {
    if (c < 2) throw ConfigError("every field needs a cardinality of at least 2");
  }

  ModelGraph g;
  g.config_ = config;
  g.cardinalities_ = cardinalities;
  g.map_ = build_operation_map(config.kind, m, config.variant);

  EmbeddingDims dims;
  if (config.dims) {
    dims = *config.dims;
  } else {
    const std::size_t copy_dim = config.copy_dim == 0 ? config.embed_dim : config.copy_dim;
    if (copy_dim != config.embed_dim && config.kind != ModelKind::ONN) {
      throw ConfigError("a separate copy-slot width needs operation-aware copy slots (model onn)");
    }
    dims = split_dims(g.map_, copy_dim, config.embed_dim);
  }
  g.bank_ = init_bank(cardinalities, g.map_, dims, rng, config.init_scale);

  InteractionConfig icfg;
  icfg.variant = config.variant;
  icfg.subnet_width = config.subnet_width;
  if (g.map_.has_products()) icfg.pairs = all_pairs(m);
  g.interactions_ = InteractionLayer(g.map_, dims, std::move(icfg), rng);

  if (is_deep(config.kind)) {
    g.mlp_.emplace(g.interactions_.output_width(), config.mlp, rng);
  } else {
    ShallowHead head;
    head.bias = Parameter("shallow/bias", 1, 1);
    for (std::size_t i = 0; i < m; ++i) {
      head.linear.emplace_back("shallow/linear/" + std::to_string(i), cardinalities[i], 1);
    }
    g.shallow_ = std::move(head);
  }
  return g;
}

ModelGraph ModelGraph::build(const FeatureSchema& schema, const ModelConfig& config, SeededRng& rng) {
  return build(schema.cardinalities(), config, rng);
}

double ModelGraph::shallow_logit(const Sample& sample, std::span<const double> i_f) const {
  double z = 0.0;
  if (config_.shallow_terms) {
    z += shallow_->bias.value(0, 0);
    for (std::size_t i = 0; i < shallow_->linear.size(); ++i) z += shallow_->linear[i].value(sample.field_values[i], 0);
  }
  if (config_.pairwise) {
    for (double p : i_f) z += p;
  }
  return z;
}

std::vector<double> ModelGraph::forward(const Batch& batch, Mode mode, SeededRng* rng) {
  DenseMatrix f = interactions_.forward(batch, bank_, map_);
  cached_ = batch.samples;
  if (mlp_) return mlp_->forward(f, mode, rng);
  std::vector<double> logits(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) logits[b] = shallow_logit(*batch.samples[b], f.row(b));
  return logits;
}

void ModelGraph::backward(std::span<const double> dlogits) {
  if (dlogits.size() != cached_.size()) throw ConfigError("backward: gradient length does not match the last batch");
  if (mlp_) {
    DenseMatrix df = mlp_->backward(dlogits);
    interactions_.backward(df, bank_, map_);
    return;
  }
  if (config_.shallow_terms) {
    for (std::size_t b = 0; b < cached_.size(); ++b) {
      shallow_->bias.grad(0, 0) += dlogits[b];
      for (std::size_t i = 0; i < shallow_->linear.size(); ++i) {
        shallow_->linear[i].grad(cached_[b]->field_values[i], 0) += dlogits[b];
      }
    }
  }
  if (config_.pairwise) {
    DenseMatrix df(cached_.size(), interactions_.output_width());
    for (std::size_t b = 0; b < cached_.size(); ++b) {
      for (double& v : df.row(b)) v = dlogits[b];
    }
    interactions_.backward(df, bank_, map_);
  }
}

std::vector<double> ModelGraph::predict_logits(const Batch& batch) const {
  DenseMatrix f = interactions_.compute(batch, bank_, map_);
  if (mlp_) return mlp_->infer(f);
  std::vector<double> logits(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) logits[b] = shallow_logit(*batch.samples[b], f.row(b));
  return logits;
}

std::vector<double> ModelGraph::predict(const Batch& batch) const {
  std::vector<double> p = predict_logits(batch);
  for (double& v : p) v = sigmoid(v);
  return p;
}

double ModelGraph::predict(const Sample& sample) const {
  Batch b;
  b.samples.push_back(&sample);
  b.positions.push_back(0);
  return predict(b)[0];
}

ParamList ModelGraph::params() {
  ParamList out;
  bank_.collect(out);
  interactions_.collect(out);
  if (mlp_) mlp_->collect(out);
  if (shallow_ && config_.shallow_terms) {
    out.push_back(&shallow_->bias);
    for (auto& p : shallow_->linear) out.push_back(&p);
  }
  return out;
}

std::vector<NamedBuffer> ModelGraph::buffers() {
  std::vector<NamedBuffer> out;
  if (mlp_) mlp_->buffers(out);
  return out;
}

void ModelGraph::zero_grad() {
  for (Parameter* p : params()) p->zero_grad();
}

std::size_t ModelGraph::parameter_count() {
  std::size_t n = 0;
  for (Parameter* p : params()) n += p->value.size();
  return n;
}

namespace {

void require_kind(const ModelGraph& graph, ModelKind kind) {
  if (graph.kind() != kind) {
    throw ConfigError("expected a " + std::string(to_string(kind)) + " graph, got " +
                      std::string(to_string(graph.kind())));
  }
}

std::vector<double> deep_forward(const Batch& batch, ModelGraph& graph, Mode mode, SeededRng* rng) {
  if (mode == Mode::Infer) return graph.predict(batch);
  std::vector<double> p = graph.forward(batch, mode, rng);
  for (double& v : p) v = sigmoid(v);
  return p;
}

}  // namespace

double fm_forward(const Sample& sample, const ModelGraph& graph) {
  require_kind(graph, ModelKind::FM);
  return graph.predict(sample);
}

double ffm_forward(const Sample& sample, const ModelGraph& graph) {
  require_kind(graph, ModelKind::FFM);
  return graph.predict(sample);
}

std::vector<double> dnn_forward(const Batch& batch, ModelGraph& graph, Mode mode, SeededRng* rng) {
  require_kind(graph, ModelKind::DNN);
  return deep_forward(batch, graph, mode, rng);
}

std::vector<double> pnn_forward(const Batch& batch, ModelGraph& graph, Mode mode, SeededRng* rng) {
  require_kind(graph, ModelKind::PNN);
  return deep_forward(batch, graph, mode, rng);
}

std::vector<double> onn_forward(const Batch& batch, ModelGraph& graph, Mode mode, SeededRng* rng) {
  require_kind(graph, ModelKind::ONN);
  return deep_forward(batch, graph, mode, rng);
}

ModelGraph tie_embeddings(const ModelGraph& source) {
  ModelKind target;
  if (source.kind() == ModelKind::ONN) {
    target = ModelKind::PNN;
  } else if (source.kind() == ModelKind::FFM) {
    target = ModelKind::FM;
  } else {
    throw ConfigError("tie_embeddings maps onn to pnn or ffm to fm, not " + std::string(to_string(source.kind())));
  }
  const EmbeddingBank& src = source.bank();
  EmbeddingDims dims(src.field_count());
  for (std::size_t i = 0; i < src.field_count(); ++i) {
    for (std::size_t k = 1; k < src.slot_count(i); ++k) {
      if (src.dim(i, k) != src.dim(i, 0)) {
        throw ConfigError("tie_embeddings: field " + std::to_string(i) + " has slots of different width");
      }
    }
    dims[i] = {src.dim(i, 0)};
  }

  ModelConfig cfg = source.config();
  cfg.kind = target;
  cfg.dims = dims;
  cfg.copy_dim = 0;
  validate_dims(build_operation_map(target, source.field_count(), cfg.variant), dims);
  EmbeddingBank bank(source.cardinalities(), dims);
  for (std::size_t i = 0; i < src.field_count(); ++i) bank.table(i, 0).value = src.table(i, 0).value;

  // Rebuild through a fresh graph so the private members stay consistent, then
  // carry over everything above the embedding layer.
  SeededRng unused(0);
  ModelGraph tied = ModelGraph::build(source.cardinalities(), cfg, unused);
  tied.bank() = std::move(bank);
  tied.interactions() = source.interactions();
  if (source.mlp()) *tied.mlp() = *source.mlp();
  if (source.shallow()) *tied.shallow() = *source.shallow();
  return tied;
}

void make_slots_identical(ModelGraph& graph) {
  EmbeddingBank& bank = graph.bank();
  for (std::size_t i = 0; i < bank.field_count(); ++i) {
    for (std::size_t k = 1; k < bank.slot_count(i); ++k) {
      if (bank.dim(i, k) != bank.dim(i, 0)) {
        throw ConfigError("make_slots_identical: field " + std::to_string(i) + " has slots of different width");
      }
      bank.table(i, k).value = bank.table(i, 0).value;
    }
  }
}

std::size_t expected_bank_size(ModelKind kind, const std::vector<std::size_t>& cardinalities, std::size_t dim) {
  const std::size_t m = cardinalities.size();
  std::size_t slots = 1;
  if (kind == ModelKind::ONN) slots = m;
  if (kind == ModelKind::FFM) slots = m - 1;
  std::size_t total = 0;
  for (auto c : cardinalities) total += c * slots * dim;
  return total;
}

}  // namespace onn
