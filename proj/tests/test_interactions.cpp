#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "onn/errors.hpp"
#include "onn/gradcheck.hpp"
#include "onn/interactions.hpp"

using namespace onn;

TEST(CopyOp, IdentityForwardAndBackward) {
  const std::vector<double> e{1, 2, 3};
  EXPECT_EQ(copy_op(e), (DenseVector{1, 2, 3}));
  EXPECT_EQ(copy_op(std::vector<double>(3, 0.0)), DenseVector(3));
}

TEST(InnerProduct, Examples) {
  EXPECT_EQ(inner_product(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}), 32.0);
  EXPECT_EQ(inner_product(std::vector<double>{1, 2}, std::vector<double>{0, 0}), 0.0);
  EXPECT_EQ(inner_product(std::vector<double>{3, 4}, std::vector<double>{3, 4}), 25.0);
  EXPECT_THROW(inner_product(std::vector<double>{1}, std::vector<double>{1, 2}), ConfigError);
}

TEST(InnerProduct, SymmetricInOperands) {
  SeededRng rng(2);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    EXPECT_EQ(inner_product(a, b), inner_product(b, a));
  }
}

TEST(InnerProduct, Backward) {
  const std::vector<double> a{1, 2}, b{3, -1};
  std::vector<double> ga(2, 0.0), gb(2, 0.0);
  inner_product_backward(a, b, 2.0, ga, gb);
  EXPECT_EQ(ga, (std::vector<double>{6, -2}));
  EXPECT_EQ(gb, (std::vector<double>{2, 4}));
}

TEST(OuterProduct, Examples) {
  const std::vector<double> a{1, 2}, b{3, 4};
  EXPECT_EQ(outer_product(a, b, DenseMatrix(2, 2, 1.0)), 21.0);
  EXPECT_EQ(outer_product(a, b, DenseMatrix::identity(2)), inner_product(a, b));
  EXPECT_EQ(outer_product(a, b, DenseMatrix(2, 2, 0.0)), 0.0);
  EXPECT_THROW(outer_product(a, b, DenseMatrix(3, 2)), ConfigError);
}

TEST(OuterProduct, MatchesDoubleSum) {
  SeededRng rng(6);
  DenseMatrix w(3, 3);
  for (double& v : w.flat()) v = rng.normal();
  std::vector<double> a(3), b(3);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) s += w(i, j) * a[i] * b[j];
  }
  EXPECT_NEAR(outer_product(a, b, w), s, 1e-12);
}

TEST(OuterProduct, BackwardMatchesFiniteDifferences) {
  SeededRng rng(8);
  Parameter a("a", 1, 3), b("b", 1, 3), w("w", 3, 3);
  for (Parameter* p : {&a, &b, &w}) {
    for (double& v : p->value.flat()) v = rng.normal();
  }
  outer_product_backward(a.value.row(0), b.value.row(0), w.value, 1.0, a.grad.row(0), b.grad.row(0), w.grad);
  const ParamList params{&a, &b, &w};
  auto numeric = finite_diff_gradient([&] { return outer_product(a.value.row(0), b.value.row(0), w.value); }, params,
                                      1e-6);
  EXPECT_LT(compare_gradients(params, numeric).max_relative_error(), 1e-8);
}

TEST(Subnet, Examples) {
  SubnetParams zero("s", 3, 2);
  for (Parameter* p : {&zero.hidden_w, &zero.hidden_b, &zero.out_w, &zero.out_b}) p->value.fill(0.0);
  const std::vector<double> a{0.5, -1}, b{2, 3};
  EXPECT_EQ(subnet_op(a, b, zero), 0.0);

  SubnetParams one("s", 1, 2);
  one.hidden_w.value.fill(0.0);
  one.hidden_w.value(0, 0) = 1.0;
  one.hidden_b.value.fill(0.0);
  one.out_w.value(0, 0) = 1.0;
  one.out_b.value(0, 0) = 0.0;
  EXPECT_EQ(subnet_op(a, b, one), 0.5);
  EXPECT_EQ(subnet_op(std::vector<double>{-0.5, 1}, b, one), 0.0);
  EXPECT_THROW(subnet_op(std::vector<double>{1}, b, one), ConfigError);
}

TEST(Subnet, BackwardMatchesFiniteDifferences) {
  SeededRng rng(12);
  SubnetParams s("s", 5, 3);
  Parameter a("a", 1, 3), b("b", 1, 3);
  for (Parameter* p : {&s.hidden_w, &s.hidden_b, &s.out_w, &s.out_b, &a, &b}) {
    for (double& v : p->value.flat()) v = rng.normal();
  }
  subnet_backward(a.value.row(0), b.value.row(0), s, 1.0, a.grad.row(0), b.grad.row(0));
  const ParamList params{&s.hidden_w, &s.hidden_b, &s.out_w, &s.out_b, &a, &b};
  auto numeric = finite_diff_gradient([&] { return subnet_op(a.value.row(0), b.value.row(0), s); }, params, 1e-6);
  EXPECT_LT(compare_gradients(params, numeric).max_relative_error(), 1e-6);
}

TEST(MedialFeatures, LengthExamples) {
  const OperationMap map = build_operation_map(ModelKind::PNN, 3);
  SeededRng rng(1);
  const InteractionLayer layer(map, uniform_dims(map, 2), InteractionConfig::make(3, ProductVariant::Inner), rng);
  EXPECT_EQ(layer.output_width(), 9u);
  EXPECT_EQ(all_pairs(26).size(), 325u);
  const auto pairs = all_pairs(4);
  EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end()));
}

TEST(MedialFeatures, LengthContractOverShapes) {
  SeededRng rng(5);
  for (std::size_t m = 2; m <= 8; ++m) {
    for (std::size_t d = 1; d <= 6; ++d) {
      for (ModelKind kind : {ModelKind::PNN, ModelKind::ONN}) {
        for (auto v : {ProductVariant::Inner, ProductVariant::Outer, ProductVariant::Subnet,
                       ProductVariant::InnerOuter}) {
          const OperationMap map = build_operation_map(kind, m, v);
          const EmbeddingDims dims = uniform_dims(map, d);
          const auto cards = onn::testing::random_cards(m, 5, rng);
          const EmbeddingBank bank = init_bank(cards, map, dims, rng, 0.1);
          const InteractionLayer layer(map, dims, InteractionConfig::make(m, v), rng);
          const std::size_t per_pair = v == ProductVariant::InnerOuter ? 2 : 1;
          const std::size_t expected = m * d + per_pair * m * (m - 1) / 2;
          ASSERT_EQ(layer.output_width(), expected);
          const auto samples = onn::testing::random_samples(cards, 1, rng);
          const MedialFeatures mf = assemble_medial(samples[0], bank, map, layer);
          EXPECT_EQ(mf.f.size(), expected);
          EXPECT_EQ(mf.e_f.size(), m * d);
          EXPECT_EQ(mf.i_f.size(), per_pair * m * (m - 1) / 2);
        }
      }
    }
  }
}

TEST(MedialFeatures, ZeroBankGivesZeroF) {
  const OperationMap map = build_operation_map(ModelKind::ONN, 4);
  SeededRng rng(2);
  const std::vector<std::size_t> cards{3, 3, 3, 3};
  const EmbeddingBank bank = init_bank(cards, map, uniform_dims(map, 2), rng, 0.0);
  const InteractionLayer layer(map, uniform_dims(map, 2), InteractionConfig::make(4, ProductVariant::Inner), rng);
  const auto samples = onn::testing::random_samples(cards, 3, rng);
  for (const auto& s : samples) {
    const MedialFeatures mf = assemble_medial(s, bank, map, layer);
    for (double v : mf.f.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(MedialFeatures, OnnPairsReadTheirOwnSlots) {
  // Brute force of f from the definition: copies, then <e_i^{Γ(p,i,j)}, e_j^{Γ(p,i,j)}>.
  const std::size_t m = 4, d = 3;
  const OperationMap map = build_operation_map(ModelKind::ONN, m);
  SeededRng rng(9);
  const std::vector<std::size_t> cards{3, 4, 5, 2};
  const EmbeddingBank bank = init_bank(cards, map, uniform_dims(map, d), rng, 1.0);
  const InteractionLayer layer(map, uniform_dims(map, d), InteractionConfig::make(m, ProductVariant::Inner), rng);
  const auto samples = onn::testing::random_samples(cards, 5, rng);
  for (const auto& s : samples) {
    std::vector<double> expected;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& t = bank.table(i, 0).value;
      for (std::size_t a = 0; a < d; ++a) expected.push_back(t(s.field_values[i], a));
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        // Slot of partner j in field i: copy is 0, then partners ascending, skipping i.
        const std::size_t ki = 1 + (j < i ? j : j - 1);
        const std::size_t kj = 1 + (i < j ? i : i - 1);
        double p = 0;
        for (std::size_t a = 0; a < d; ++a) {
          p += bank.table(i, ki).value(s.field_values[i], a) * bank.table(j, kj).value(s.field_values[j], a);
        }
        expected.push_back(p);
      }
    }
    const MedialFeatures mf = assemble_medial(s, bank, map, layer);
    ASSERT_EQ(mf.f.size(), expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(mf.f[k], expected[k], 1e-14);
  }
}

TEST(MedialFeatures, InnerOuterIsPairMajorInnerFirst) {
  const OperationMap map = build_operation_map(ModelKind::PNN, 3, ProductVariant::InnerOuter);
  SeededRng rng(3);
  const std::vector<std::size_t> cards{3, 3, 3};
  const EmbeddingBank bank = init_bank(cards, map, uniform_dims(map, 2), rng, 1.0);
  const InteractionLayer layer(map, uniform_dims(map, 2), InteractionConfig::make(3, ProductVariant::InnerOuter), rng);
  const auto s = onn::testing::random_samples(cards, 1, rng)[0];
  const MedialFeatures mf = assemble_medial(s, bank, map, layer);
  std::size_t k = 0;
  for (const auto& [i, j] : all_pairs(3)) {
    const auto a = bank.row(i, 0, s.field_values[i]);
    const auto b = bank.row(j, 0, s.field_values[j]);
    EXPECT_NEAR(mf.i_f[2 * k], inner_product(a, b), 1e-14);
    EXPECT_NEAR(mf.i_f[2 * k + 1], outer_product(a, b, layer.outer_kernels()[k].value), 1e-14);
    ++k;
  }
}

TEST(InteractionLayer, GradientOfSumOfInteractionsPerVariant) {
  for (auto v : {ProductVariant::Inner, ProductVariant::Outer, ProductVariant::Subnet, ProductVariant::InnerOuter}) {
    const std::size_t m = 4, d = 3;
    const OperationMap map = build_operation_map(ModelKind::ONN, m, v);
    SeededRng rng(14);
    const std::vector<std::size_t> cards{3, 4, 2, 3};
    EmbeddingBank bank = init_bank(cards, map, uniform_dims(map, d), rng, 0.7);
    InteractionLayer layer(map, uniform_dims(map, d), InteractionConfig::make(m, v), rng);
    const auto samples = onn::testing::random_samples(cards, 4, rng);
    const Batch batch = onn::testing::batch_of(samples);

    ParamList params;
    bank.collect(params);
    layer.collect(params);
    for (Parameter* p : params) p->zero_grad();
    const DenseMatrix f = layer.forward(batch, bank, map);
    DenseMatrix g(f.rows(), f.cols(), 0.0);
    for (std::size_t b = 0; b < g.rows(); ++b) {
      for (std::size_t k = layer.copy_width(); k < g.cols(); ++k) g(b, k) = 1.0;
    }
    layer.backward(g, bank, map);
    auto loss = [&] {
      const DenseMatrix out = layer.compute(batch, bank, map);
      double s = 0;
      for (std::size_t b = 0; b < out.rows(); ++b) {
        for (std::size_t k = layer.copy_width(); k < out.cols(); ++k) s += out(b, k);
      }
      return s;
    };
    const auto numeric = finite_diff_gradient(loss, params, 1e-6);
    EXPECT_LT(compare_gradients(params, numeric).max_relative_error(), 1e-4) << to_string(v);
  }
}

TEST(InteractionLayer, GradientRoutesOnlyToVisitedSlots) {
  const std::size_t m = 3;
  const OperationMap map = build_operation_map(ModelKind::ONN, m);
  SeededRng rng(15);
  const std::vector<std::size_t> cards{4, 4, 4};
  EmbeddingBank bank = init_bank(cards, map, uniform_dims(map, 2), rng, 0.5);
  InteractionLayer layer(map, uniform_dims(map, 2), InteractionConfig::make(m, ProductVariant::Inner), rng);
  std::vector<Sample> one(1);
  one[0].field_values = {1, 2, 3};
  const Batch batch = onn::testing::batch_of(one);
  const DenseMatrix f = layer.forward(batch, bank, map);
  layer.backward(DenseMatrix(1, f.cols(), 1.0), bank, map);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < map.slot_count(i); ++k) {
      const auto& grad = bank.table(i, k).grad;
      for (std::size_t r = 0; r < grad.rows(); ++r) {
        for (std::size_t c = 0; c < grad.cols(); ++c) {
          if (r != one[0].field_values[i]) EXPECT_EQ(grad(r, c), 0.0);
        }
      }
    }
  }
}

TEST(InteractionLayer, SubnetParametersArePrivatePerPair) {
  const OperationMap map = build_operation_map(ModelKind::ONN, 4, ProductVariant::Subnet);
  SeededRng rng(1);
  const InteractionLayer layer(map, uniform_dims(map, 3), InteractionConfig::make(4, ProductVariant::Subnet), rng);
  ASSERT_EQ(layer.subnets().size(), 6u);
  EXPECT_EQ(layer.subnets()[0].width(), 3u);
  EXPECT_NE(layer.subnets()[0].hidden_w.value, layer.subnets()[1].hidden_w.value);
}
