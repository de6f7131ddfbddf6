#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "onn/datapipe.hpp"
#include "onn/deepnet.hpp"
#include "onn/embedding.hpp"
#include "onn/interactions.hpp"
#include "onn/numerics.hpp"

namespace onn {

struct ModelConfig {
  ModelKind kind = ModelKind::ONN;
  ProductVariant variant = ProductVariant::Inner;
  std::size_t embed_dim = 10;
  // Width of ONN copy slots; 0 means embed_dim.
  std::size_t copy_dim = 0;
  // Full per-(field, slot) override of the two settings above.
  std::optional<EmbeddingDims> dims;
  std::size_t subnet_width = 0;
  double init_scale = 0.01;
  MlpConfig mlp;
  // FM/FFM global bias and per-value linear weights.
  bool shallow_terms = true;
  // FM/FFM pairwise term; turning it off leaves plain logistic regression.
  bool pairwise = true;
};

bool is_deep(ModelKind kind);

/// Global bias plus one weight per (field, value), for FM and FFM.
struct ShallowHead {
  Parameter bias;                  // 1 x 1
  std::vector<Parameter> linear;   // per field: cardinality x 1
};

/// One assembled model: embedding bank and operation map, the interaction
/// layer, and either an MLP (DNN/PNN/ONN) or a shallow head (FM/FFM).
class ModelGraph {
 public:
  ModelGraph() = default;

  static ModelGraph build(const std::vector<std::size_t>& cardinalities, const ModelConfig& config, SeededRng& rng);
  static ModelGraph build(const FeatureSchema& schema, const ModelConfig& config, SeededRng& rng);

  ModelKind kind() const { return config_.kind; }
  const ModelConfig& config() const { return config_; }
  const std::vector<std::size_t>& cardinalities() const { return cardinalities_; }
  std::size_t field_count() const { return cardinalities_.size(); }

  const OperationMap& operation_map() const { return map_; }
  EmbeddingBank& bank() { return bank_; }
  const EmbeddingBank& bank() const { return bank_; }
  InteractionLayer& interactions() { return interactions_; }
  const InteractionLayer& interactions() const { return interactions_; }
  Mlp* mlp() { return mlp_ ? &*mlp_ : nullptr; }
  const Mlp* mlp() const { return mlp_ ? &*mlp_ : nullptr; }
  ShallowHead* shallow() { return shallow_ ? &*shallow_ : nullptr; }
  const ShallowHead* shallow() const { return shallow_ ? &*shallow_ : nullptr; }

  // Logits for a batch, caching what backward needs. Train mode updates BN running stats.
  std::vector<double> forward(const Batch& batch, Mode mode, SeededRng* rng = nullptr);
  // Accumulates parameter gradients given dL/dlogit per sample of the last forward.
  void backward(std::span<const double> dlogits);

  // Inference-mode probabilities; read-only, so safe to share across threads.
  std::vector<double> predict(const Batch& batch) const;
  std::vector<double> predict_logits(const Batch& batch) const;
  double predict(const Sample& sample) const;

  ParamList params();
  std::vector<NamedBuffer> buffers();
  void zero_grad();
  std::size_t parameter_count();

 private:
  ModelConfig config_;
  std::vector<std::size_t> cardinalities_;
  OperationMap map_;
  EmbeddingBank bank_;
  InteractionLayer interactions_;
  std::optional<Mlp> mlp_;
  std::optional<ShallowHead> shallow_;
  std::vector<const Sample*> cached_;

  double shallow_logit(const Sample& sample, std::span<const double> i_f) const;
};

// Single-sample probability for shallow models.
double fm_forward(const Sample& sample, const ModelGraph& graph);
double ffm_forward(const Sample& sample, const ModelGraph& graph);
// Batch probabilities for deep models; train mode updates BN statistics.
std::vector<double> dnn_forward(const Batch& batch, ModelGraph& graph, Mode mode, SeededRng* rng = nullptr);
std::vector<double> pnn_forward(const Batch& batch, ModelGraph& graph, Mode mode, SeededRng* rng = nullptr);
std::vector<double> onn_forward(const Batch& batch, ModelGraph& graph, Mode mode, SeededRng* rng = nullptr);

/// ONN -> PNN or FFM -> FM: a single-slot graph whose table for each field is
/// the source's slot-0 table. Everything above the embedding layer is copied.
/// Throws ConfigError when a field's slots differ in width.
ModelGraph tie_embeddings(const ModelGraph& source);

// Overwrites every slot of each field with that field's slot-0 table.
void make_slots_identical(ModelGraph& graph);

// Σ cardinality · slots · dim, from the formulas rather than the allocated bank.
std::size_t expected_bank_size(ModelKind kind, const std::vector<std::size_t>& cardinalities, std::size_t dim);

}  // namespace onn
