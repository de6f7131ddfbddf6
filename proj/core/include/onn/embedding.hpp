#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "onn/numerics.hpp"

namespace onn {

class FeatureSchema;

enum class ModelKind : std::uint8_t { FM = 0, FFM = 1, DNN = 2, PNN = 3, ONN = 4 };
enum class ProductVariant : std::uint8_t { Inner = 0, Outer = 1, Subnet = 2, InnerOuter = 3 };

std::string_view to_string(ModelKind kind);
std::string_view to_string(ProductVariant variant);
ModelKind parse_model_kind(std::string_view s);
ProductVariant parse_product_variant(std::string_view s);

enum class OpKind : std::uint8_t { Copy = 0, Product = 1 };

/// o(c, i) or o(p, i, j) as seen from field i. The owning field is implicit:
/// descriptors live in that field's list of the OperationMap.
struct OperationDescriptor {
  OpKind kind = OpKind::Copy;
  std::size_t partner = 0;
  ProductVariant variant = ProductVariant::Inner;

  static OperationDescriptor copy() { return {}; }
  static OperationDescriptor product(std::size_t partner, ProductVariant variant = ProductVariant::Inner) {
    return {OpKind::Product, partner, variant};
  }

  bool operator==(const OperationDescriptor&) const = default;
};

/// The mapping Γ(o, i) -> k from an operation on field i to the embedding slot
/// it reads. Operation-aware maps (ONN, FFM) give each descriptor its own slot:
/// copy first, then products by ascending partner. Shared maps (FM, DNN, PNN)
/// send every descriptor of a field to slot 0.
class OperationMap {
 public:
  OperationMap() = default;

  ModelKind kind() const { return kind_; }
  ProductVariant variant() const { return variant_; }
  std::size_t field_count() const { return operations_.size(); }

  const std::vector<OperationDescriptor>& operations(std::size_t field) const { return operations_.at(field); }
  std::size_t slot_count(std::size_t field) const { return slot_counts_.at(field); }
  bool has_copy() const { return has_copy_; }
  bool has_products() const { return has_products_; }

  // Γ(o, i). Throws std::logic_error when `op` is not one of field i's operations.
  std::size_t slot(const OperationDescriptor& op, std::size_t field) const;
  std::optional<std::size_t> find_slot(const OperationDescriptor& op, std::size_t field) const;

  // Precomputed fast paths for the hot loops.
  std::size_t copy_slot(std::size_t field) const { return copy_slot_[field]; }
  std::size_t product_slot(std::size_t field, std::size_t partner) const {
    return product_slot_[field * operations_.size() + partner];
  }

  bool operator==(const OperationMap& other) const;

  friend OperationMap build_operation_map(ModelKind kind, std::size_t field_count, ProductVariant variant);
  // Rebuilds a map from explicit lists (checkpoint loading). Validates the bijection.
  static OperationMap from_parts(ModelKind kind, ProductVariant variant,
                                 std::vector<std::vector<OperationDescriptor>> operations,
                                 std::vector<std::vector<std::size_t>> slots);

  const std::vector<std::size_t>& slots(std::size_t field) const { return slots_.at(field); }

 private:
  ModelKind kind_ = ModelKind::ONN;
  ProductVariant variant_ = ProductVariant::Inner;
  std::vector<std::vector<OperationDescriptor>> operations_;
  // slots_[i][n] is the slot of operations_[i][n].
  std::vector<std::vector<std::size_t>> slots_;
  std::vector<std::size_t> slot_counts_;
  std::vector<std::size_t> copy_slot_;
  std::vector<std::size_t> product_slot_;
  bool has_copy_ = false;
  bool has_products_ = false;

  void index();
};

/// Throws ConfigError for m < 1, or m < 2 when the model needs product pairs.
OperationMap build_operation_map(ModelKind kind, std::size_t field_count,
                                 ProductVariant variant = ProductVariant::Inner);

// dims[i][k]: dimensionality of slot k of field i.
using EmbeddingDims = std::vector<std::vector<std::size_t>>;

EmbeddingDims uniform_dims(const OperationMap& map, std::size_t dim);
// Copy slots get `copy_dim`, product slots `product_dim`. Only meaningful for
// operation-aware maps, where the two kinds of slot are distinct.
EmbeddingDims split_dims(const OperationMap& map, std::size_t copy_dim, std::size_t product_dim);
// Throws ConfigError if the shape is wrong or a product joins slots of different width.
void validate_dims(const OperationMap& map, const EmbeddingDims& dims);

/// The matrices V^{i,k}: one (cardinality_i x d_ik) table per field and slot.
class EmbeddingBank {
 public:
  EmbeddingBank() = default;
  EmbeddingBank(const std::vector<std::size_t>& cardinalities, const EmbeddingDims& dims);

  std::size_t field_count() const { return tables_.size(); }
  std::size_t slot_count(std::size_t field) const { return tables_.at(field).size(); }
  std::size_t cardinality(std::size_t field) const { return cardinalities_.at(field); }
  std::size_t dim(std::size_t field, std::size_t slot) const { return tables_[field][slot].value.cols(); }
  const EmbeddingDims& dims() const { return dims_; }

  Parameter& table(std::size_t field, std::size_t slot) { return tables_.at(field).at(slot); }
  const Parameter& table(std::size_t field, std::size_t slot) const { return tables_.at(field).at(slot); }

  std::span<const double> row(std::size_t field, std::size_t slot, std::uint32_t value) const {
    return tables_[field][slot].value.row(value);
  }
  void accumulate(std::size_t field, std::size_t slot, std::uint32_t value, std::span<const double> grad);
  void accumulate(std::size_t field, std::size_t slot, std::uint32_t value, double scale,
                  std::span<const double> grad);

  std::size_t parameter_count() const;
  void collect(ParamList& out);

 private:
  std::vector<std::size_t> cardinalities_;
  EmbeddingDims dims_;
  std::vector<std::vector<Parameter>> tables_;
};

/// Uniform(-scale, scale) entries, drawn table by table in (field, slot) order.
EmbeddingBank init_bank(const std::vector<std::size_t>& cardinalities, const OperationMap& map,
                        const EmbeddingDims& dims, SeededRng& rng, double scale);
EmbeddingBank init_bank(const FeatureSchema& schema, const OperationMap& map, const EmbeddingDims& dims,
                        SeededRng& rng, double scale);

// e_i^{Γ(o,i)} for value index v. Unknown descriptors throw std::logic_error.
std::span<const double> lookup(const EmbeddingBank& bank, const OperationMap& map, std::size_t field,
                               const OperationDescriptor& op, std::uint32_t value);

}  // namespace onn
