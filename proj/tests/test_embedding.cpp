#include <gtest/gtest.h>

#include <set>
#include <stdexcept>

#include "helpers.hpp"
#include "onn/embedding.hpp"
#include "onn/errors.hpp"
#include "onn/modelzoo.hpp"

using namespace onn;

TEST(OperationMap, OnnSlotsCopyThenAscendingPartners) {
  // Fields are 0-based here: field 0 pairs with fields 1 and 2.
  const OperationMap map = build_operation_map(ModelKind::ONN, 3);
  const auto& ops = map.operations(0);
  ASSERT_EQ(ops.size(), 3u);
  EXPECT_EQ(ops[0], OperationDescriptor::copy());
  EXPECT_EQ(ops[1], OperationDescriptor::product(1));
  EXPECT_EQ(ops[2], OperationDescriptor::product(2));
  EXPECT_EQ(map.slot(OperationDescriptor::product(2), 0), 2u);
  EXPECT_EQ(map.slot(OperationDescriptor::product(0), 2), 1u);
}

TEST(OperationMap, PnnSharesSlotZero) {
  const OperationMap map = build_operation_map(ModelKind::PNN, 3);
  EXPECT_EQ(map.slot(OperationDescriptor::copy(), 0), 0u);
  EXPECT_EQ(map.slot(OperationDescriptor::product(1), 0), 0u);
  EXPECT_EQ(map.slot(OperationDescriptor::product(2), 0), 0u);
  EXPECT_EQ(map.slot_count(0), 1u);
}

TEST(OperationMap, OnnWith39Fields) {
  const OperationMap map = build_operation_map(ModelKind::ONN, 39);
  for (std::size_t i = 0; i < 39; ++i) EXPECT_EQ(map.slot_count(i), 39u);
}

TEST(OperationMap, KindsAndErrors) {
  const OperationMap ffm = build_operation_map(ModelKind::FFM, 4);
  EXPECT_FALSE(ffm.has_copy());
  EXPECT_EQ(ffm.slot_count(0), 3u);
  EXPECT_FALSE(ffm.find_slot(OperationDescriptor::copy(), 0));

  const OperationMap dnn = build_operation_map(ModelKind::DNN, 1);
  EXPECT_FALSE(dnn.has_products());
  EXPECT_EQ(dnn.operations(0).size(), 1u);

  const OperationMap fm = build_operation_map(ModelKind::FM, 3);
  EXPECT_FALSE(fm.has_copy());

  EXPECT_THROW(build_operation_map(ModelKind::ONN, 1), ConfigError);
  EXPECT_THROW(build_operation_map(ModelKind::DNN, 0), ConfigError);
  EXPECT_THROW(fm.slot(OperationDescriptor::product(0), 0), std::logic_error);
  EXPECT_THROW(dnn.slot(OperationDescriptor::product(0), 0), std::logic_error);
}

TEST(OperationMap, GammaIsABijectionForEveryKind) {
  for (ModelKind kind : {ModelKind::FM, ModelKind::FFM, ModelKind::DNN, ModelKind::PNN, ModelKind::ONN}) {
    for (std::size_t m = 2; m <= 8; ++m) {
      const OperationMap map = build_operation_map(kind, m);
      const bool aware = kind == ModelKind::ONN || kind == ModelKind::FFM;
      for (std::size_t i = 0; i < m; ++i) {
        std::set<std::size_t> slots;
        for (const auto& op : map.operations(i)) {
          if (op.kind == OpKind::Product) EXPECT_NE(op.partner, i);
          slots.insert(map.slot(op, i));
        }
        if (aware) {
          EXPECT_EQ(slots.size(), map.operations(i).size());
          EXPECT_EQ(*slots.rbegin() + 1, map.slot_count(i));
        } else {
          EXPECT_EQ(slots, std::set<std::size_t>{0});
        }
      }
    }
  }
}

TEST(OperationMap, Parsing) {
  EXPECT_EQ(parse_model_kind("onn"), ModelKind::ONN);
  EXPECT_EQ(parse_product_variant("inner+outer"), ProductVariant::InnerOuter);
  EXPECT_THROW(parse_model_kind("deepfm"), ConfigError);
  EXPECT_THROW(parse_product_variant("hadamard"), ConfigError);
  for (auto v : {ProductVariant::Inner, ProductVariant::Outer, ProductVariant::Subnet, ProductVariant::InnerOuter}) {
    EXPECT_EQ(parse_product_variant(to_string(v)), v);
  }
}

TEST(EmbeddingBank, OnnParameterCount) {
  const std::vector<std::size_t> cards{2, 3, 4};
  const OperationMap map = build_operation_map(ModelKind::ONN, 3);
  SeededRng rng(1);
  const EmbeddingBank bank = init_bank(cards, map, uniform_dims(map, 2), rng, 0.01);
  std::size_t entries = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < bank.slot_count(i); ++k) entries += bank.table(i, k).value.size();
  }
  EXPECT_EQ(entries, 54u);
  EXPECT_EQ(bank.parameter_count(), 54u);
}

TEST(EmbeddingBank, CountFormulasForEveryKind) {
  SeededRng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(6);
    const std::size_t d = 1 + rng.uniform_index(5);
    const auto cards = onn::testing::random_cards(m, 9, rng);
    for (ModelKind kind : {ModelKind::FM, ModelKind::FFM, ModelKind::DNN, ModelKind::PNN, ModelKind::ONN}) {
      const OperationMap map = build_operation_map(kind, m);
      const EmbeddingBank bank = init_bank(cards, map, uniform_dims(map, d), rng, 0.1);
      EXPECT_EQ(bank.parameter_count(), expected_bank_size(kind, cards, d));
    }
  }
}

TEST(EmbeddingBank, ScaleZeroAndDeterminism) {
  const std::vector<std::size_t> cards{3, 5};
  const OperationMap map = build_operation_map(ModelKind::ONN, 2);
  SeededRng r0(1);
  const EmbeddingBank zero = init_bank(cards, map, uniform_dims(map, 3), r0, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      for (double v : zero.table(i, k).value.flat()) EXPECT_EQ(v, 0.0);
    }
  }
  EXPECT_EQ(lookup(zero, map, 1, OperationDescriptor::product(0), 4)[2], 0.0);

  SeededRng a(7), b(7);
  const EmbeddingBank x = init_bank(cards, map, uniform_dims(map, 3), a, 0.05);
  const EmbeddingBank y = init_bank(cards, map, uniform_dims(map, 3), b, 0.05);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(x.table(i, k).value, y.table(i, k).value);
      for (double v : x.table(i, k).value.flat()) {
        EXPECT_GE(v, -0.05);
        EXPECT_LE(v, 0.05);
      }
    }
  }
}

TEST(EmbeddingBank, LookupAliasingPerKind) {
  const std::vector<std::size_t> cards{4, 4, 4};
  SeededRng rng(3);
  const OperationMap pnn = build_operation_map(ModelKind::PNN, 3);
  const EmbeddingBank shared = init_bank(cards, pnn, uniform_dims(pnn, 3), rng, 0.1);
  const auto c = lookup(shared, pnn, 0, OperationDescriptor::copy(), 2);
  const auto p = lookup(shared, pnn, 0, OperationDescriptor::product(1), 2);
  EXPECT_EQ(c.data(), p.data());

  const OperationMap onn = build_operation_map(ModelKind::ONN, 3);
  EmbeddingBank aware = init_bank(cards, onn, uniform_dims(onn, 3), rng, 0.1);
  const auto p1 = lookup(aware, onn, 0, OperationDescriptor::product(1), 2);
  const auto p2 = lookup(aware, onn, 0, OperationDescriptor::product(2), 2);
  EXPECT_NE(std::vector<double>(p1.begin(), p1.end()), std::vector<double>(p2.begin(), p2.end()));

  // Perturbing one slot leaves every other slot's lookups unchanged.
  const std::vector<double> before(p2.begin(), p2.end());
  aware.table(0, 1).value(2, 0) += 1.0;
  const auto after = lookup(aware, onn, 0, OperationDescriptor::product(2), 2);
  EXPECT_EQ(std::vector<double>(after.begin(), after.end()), before);

  EXPECT_THROW(lookup(aware, onn, 0, OperationDescriptor::product(0), 1), std::logic_error);
  EXPECT_THROW(lookup(aware, onn, 0, OperationDescriptor::copy(), 4), std::out_of_range);
}

TEST(EmbeddingDims, ProductCompatibility) {
  const OperationMap onn = build_operation_map(ModelKind::ONN, 3);
  EXPECT_NO_THROW(validate_dims(onn, split_dims(onn, 7, 3)));
  EmbeddingDims bad = uniform_dims(onn, 3);
  bad[1][1] = 4;  // field 1's slot for partner 0 no longer matches field 0's slot for partner 1
  EXPECT_THROW(validate_dims(onn, bad), ConfigError);
  EmbeddingDims zero = uniform_dims(onn, 3);
  zero[0][0] = 0;
  EXPECT_THROW(validate_dims(onn, zero), ConfigError);
  EXPECT_THROW(validate_dims(onn, EmbeddingDims(2)), ConfigError);
}
