#include "onn/embedding.hpp"

#include <stdexcept>
#include <string>

#include "onn/datapipe.hpp"
#include "onn/errors.hpp"

namespace onn {

namespace {

constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::FM: return "fm";
    case ModelKind::FFM: return "ffm";
    case ModelKind::DNN: return "dnn";
    case ModelKind::PNN: return "pnn";
    case ModelKind::ONN: return "onn";
  }
  return "?";
}

std::string_view to_string(ProductVariant variant) {
  switch (variant) {
    case ProductVariant::Inner: return "inner";
    case ProductVariant::Outer: return "outer";
    case ProductVariant::Subnet: return "subnet";
    case ProductVariant::InnerOuter: return "inner+outer";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::FM, ModelKind::FFM, ModelKind::DNN, ModelKind::PNN, ModelKind::ONN}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(s) + "' (expected fm, ffm, dnn, pnn or onn)");
}

ProductVariant parse_product_variant(std::string_view s) {
  for (auto v : {ProductVariant::Inner, ProductVariant::Outer, ProductVariant::Subnet, ProductVariant::InnerOuter}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown product variant '" + std::string(s) + "' (expected inner, outer, subnet or inner+outer)");
}

std::optional<std::size_t> OperationMap::find_slot(const OperationDescriptor& op, std::size_t field) const {
  if (field >= operations_.size()) return std::nullopt;
  const auto& ops = operations_[field];
  for (std::size_t n = 0; n < ops.size(); ++n) {
    if (ops[n] == op) return slots_[field][n];
  }
  return std::nullopt;
}

std::size_t OperationMap::slot(const OperationDescriptor& op, std::size_t field) const {
  if (auto k = find_slot(op, field)) return *k;
  throw std::logic_error("operation map has no such operation on field " + std::to_string(field));
}

bool OperationMap::operator==(const OperationMap& other) const {
  return kind_ == other.kind_ && variant_ == other.variant_ && operations_ == other.operations_ &&
         slots_ == other.slots_;
}

void OperationMap::index() {
  const std::size_t m = operations_.size();
  slot_counts_.assign(m, 0);
  copy_slot_.assign(m, kNoSlot);
  product_slot_.assign(m * m, kNoSlot);
  has_copy_ = false;
  has_products_ = false;
  for (std::size_t i = 0; i < m; ++i) {
    if (slots_[i].size() != operations_[i].size()) throw ConfigError("operation map: slot list length mismatch");
    std::vector<bool> used;
    for (std::size_t n = 0; n < operations_[i].size(); ++n) {
      const auto& op = operations_[i][n];
      const std::size_t k = slots_[i][n];
      if (k >= used.size()) used.resize(k + 1, false);
      used[k] = true;
      if (op.kind == OpKind::Copy) {
        copy_slot_[i] = k;
        has_copy_ = true;
      } else {
        if (op.partner >= m || op.partner == i) throw ConfigError("operation map: bad product partner");
        product_slot_[i * m + op.partner] = k;
        has_products_ = true;
      }
    }
    for (bool u : used) {
      if (!u) throw ConfigError("operation map: slots of field " + std::to_string(i) + " are not dense");
    }
    slot_counts_[i] = used.size();
  }
}

OperationMap OperationMap::from_parts(ModelKind kind, ProductVariant variant,
                                      std::vector<std::vector<OperationDescriptor>> operations,
                                      std::vector<std::vector<std::size_t>> slots) {
  if (operations.size() != slots.size()) throw ConfigError("operation map: field count mismatch");
  OperationMap map;
  map.kind_ = kind;
  map.variant_ = variant;
  map.operations_ = std::move(operations);
  map.slots_ = std::move(slots);
  map.index();
  return map;
}

OperationMap build_operation_map(ModelKind kind, std::size_t field_count, ProductVariant variant) {
  if (field_count < 1) throw ConfigError("operation map needs at least one field");
  const bool products = kind != ModelKind::DNN;
  const bool copies = kind == ModelKind::DNN || kind == ModelKind::PNN || kind == ModelKind::ONN;
  const bool aware = kind == ModelKind::ONN || kind == ModelKind::FFM;
  if (products && field_count < 2) {
    throw ConfigError(std::string(to_string(kind)) + " needs at least two fields to form product pairs");
  }

  OperationMap map;
  map.kind_ = kind;
  map.variant_ = variant;
  map.operations_.resize(field_count);
  map.slots_.resize(field_count);
  for (std::size_t i = 0; i < field_count; ++i) {
    auto& ops = map.operations_[i];
    if (copies) ops.push_back(OperationDescriptor::copy());
    if (products) {
      for (std::size_t j = 0; j < field_count; ++j) {
        if (j != i) ops.push_back(OperationDescriptor::product(j, variant));
      }
    }
    auto& slots = map.slots_[i];
    for (std::size_t n = 0; n < ops.size(); ++n) slots.push_back(aware ? n : 0);
  }
  map.index();
  return map;
}

EmbeddingDims uniform_dims(const OperationMap& map, std::size_t dim) {
  EmbeddingDims dims(map.field_count());
  for (std::size_t i = 0; i < map.field_count(); ++i) dims[i].assign(map.slot_count(i), dim);
  return dims;
}

EmbeddingDims split_dims(const OperationMap& map, std::size_t copy_dim, std::size_t product_dim) {
  EmbeddingDims dims = uniform_dims(map, product_dim);
  if (map.has_copy()) {
    for (std::size_t i = 0; i < map.field_count(); ++i) dims[i][map.copy_slot(i)] = copy_dim;
  }
  return dims;
}

void validate_dims(const OperationMap& map, const EmbeddingDims& dims) {
  if (dims.size() != map.field_count()) throw ConfigError("embedding dims: field count mismatch");
  const std::size_t m = map.field_count();
  for (std::size_t i = 0; i < m; ++i) {
    if (dims[i].size() != map.slot_count(i)) {
      throw ConfigError("embedding dims: field " + std::to_string(i) + " has " + std::to_string(dims[i].size()) +
                        " dims for " + std::to_string(map.slot_count(i)) + " slots");
    }
    for (auto d : dims[i]) {
      if (d == 0) throw ConfigError("embedding dims must be positive");
    }
  }
  if (!map.has_products()) return;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto di = dims[i][map.product_slot(i, j)];
      const auto dj = dims[j][map.product_slot(j, i)];
      if (di != dj) {
        throw ConfigError("embedding dims: product of fields " + std::to_string(i) + " and " + std::to_string(j) +
                          " joins slots of width " + std::to_string(di) + " and " + std::to_string(dj));
      }
    }
  }
}

EmbeddingBank::EmbeddingBank(const std::vector<std::size_t>& cardinalities, const EmbeddingDims& dims)
    : cardinalities_(cardinalities), dims_(dims) {
  if (cardinalities.size() != dims.size()) throw ConfigError("embedding bank: field count mismatch");
  tables_.resize(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) {
    for (std::size_t k = 0; k < dims[i].size(); ++k) {
      tables_[i].emplace_back("emb/" + std::to_string(i) + "/" + std::to_string(k), cardinalities[i], dims[i][k]);
    }
  }
}

void EmbeddingBank::accumulate(std::size_t field, std::size_t slot, std::uint32_t value,
                               std::span<const double> grad) {
  axpy(1.0, grad, tables_[field][slot].grad.row(value));
}

void EmbeddingBank::accumulate(std::size_t field, std::size_t slot, std::uint32_t value, double scale,
                               std::span<const double> grad) {
  axpy(scale, grad, tables_[field][slot].grad.row(value));
}

std::size_t EmbeddingBank::parameter_count() const {
  std::size_t n = 0;
  for (const auto& field : tables_) {
    for (const auto& t : field) n += t.value.size();
  }
  return n;
}

void EmbeddingBank::collect(ParamList& out) {
  for (auto& field : tables_) {
    for (auto& t : field) out.push_back(&t);
  }
}

EmbeddingBank init_bank(const std::vector<std::size_t>& cardinalities, const OperationMap& map,
                        const EmbeddingDims& dims, SeededRng& rng, double scale) {
  if (cardinalities.size() != map.field_count()) throw ConfigError("init_bank: schema and operation map disagree");
  validate_dims(map, dims);
  EmbeddingBank bank(cardinalities, dims);
  for (std::size_t i = 0; i < bank.field_count(); ++i) {
    for (std::size_t k = 0; k < bank.slot_count(i); ++k) {
      for (double& v : bank.table(i, k).value.flat()) v = rng.uniform(-scale, scale);
    }
  }
  return bank;
}

EmbeddingBank init_bank(const FeatureSchema& schema, const OperationMap& map, const EmbeddingDims& dims,
                        SeededRng& rng, double scale) {
  return init_bank(schema.cardinalities(), map, dims, rng, scale);
}

std::span<const double> lookup(const EmbeddingBank& bank, const OperationMap& map, std::size_t field,
                               const OperationDescriptor& op, std::uint32_t value) {
  const std::size_t k = map.slot(op, field);
  if (value >= bank.cardinality(field)) {
    throw std::out_of_range("lookup: value index " + std::to_string(value) + " out of range for field " +
                            std::to_string(field));
  }
  return bank.row(field, k, value);
}

}  // namespace onn
