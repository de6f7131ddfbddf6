#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "onn/errors.hpp"
#include "onn/modelzoo.hpp"
#include "onn/trainer.hpp"

using namespace onn;
using onn::testing::batch_of;
using onn::testing::random_cards;
using onn::testing::random_samples;

namespace {

ModelConfig shallow_config(ModelKind kind, std::size_t d, bool shallow_terms) {
  ModelConfig c;
  c.kind = kind;
  c.embed_dim = d;
  c.shallow_terms = shallow_terms;
  c.init_scale = 0.5;
  return c;
}

ModelConfig deep_config(ModelKind kind, std::size_t d) {
  ModelConfig c;
  c.kind = kind;
  c.embed_dim = d;
  c.init_scale = 0.5;
  c.mlp.hidden = {7, 5};
  return c;
}

double logit_of(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST(Fm, Examples) {
  SeededRng rng(1);
  ModelGraph zero = ModelGraph::build({3, 3}, shallow_config(ModelKind::FM, 2, false), rng);
  for (std::size_t i = 0; i < 2; ++i) zero.bank().table(i, 0).value.fill(0.0);
  Sample s{{1, 2}, 0};
  EXPECT_EQ(fm_forward(s, zero), 0.5);

  ModelGraph g = ModelGraph::build({2, 2}, shallow_config(ModelKind::FM, 2, false), rng);
  g.bank().table(0, 0).value(1, 0) = 1.0;
  g.bank().table(0, 0).value(1, 1) = 0.0;
  g.bank().table(1, 0).value(1, 0) = 2.0;
  g.bank().table(1, 0).value(1, 1) = 0.0;
  EXPECT_NEAR(fm_forward(Sample{{1, 1}, 0}, g), 0.8808, 1e-4);
  EXPECT_NEAR(fm_forward(Sample{{1, 1}, 0}, g), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
}

TEST(Fm, MatchesDirectPairSum) {
  SeededRng rng(2);
  const std::vector<std::size_t> cards{4, 3, 5};
  const ModelGraph g = ModelGraph::build(cards, shallow_config(ModelKind::FM, 3, true), rng);
  ModelGraph& mg = const_cast<ModelGraph&>(g);
  mg.shallow()->bias.value(0, 0) = 0.2;
  for (auto& p : mg.shallow()->linear) {
    for (double& v : p.value.flat()) v = rng.uniform(-1, 1);
  }
  for (const Sample& s : random_samples(cards, 20, rng)) {
    double z = g.shallow()->bias.value(0, 0);
    for (std::size_t i = 0; i < 3; ++i) z += g.shallow()->linear[i].value(s.field_values[i], 0);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i + 1; j < 3; ++j) {
        for (std::size_t a = 0; a < 3; ++a) {
          z += g.bank().table(i, 0).value(s.field_values[i], a) * g.bank().table(j, 0).value(s.field_values[j], a);
        }
      }
    }
    EXPECT_NEAR(logit_of(fm_forward(s, g)), z, 1e-10);
  }
}

TEST(Ffm, MatchesDirectFieldAwareSum) {
  SeededRng rng(3);
  const std::vector<std::size_t> cards{4, 3, 5};
  const ModelGraph g = ModelGraph::build(cards, shallow_config(ModelKind::FFM, 2, false), rng);
  for (const Sample& s : random_samples(cards, 20, rng)) {
    double z = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i + 1; j < 3; ++j) {
        // FFM slots: partners ascending with no copy slot.
        const std::size_t ki = j < i ? j : j - 1;
        const std::size_t kj = i < j ? i : i - 1;
        for (std::size_t a = 0; a < 2; ++a) {
          z += g.bank().table(i, ki).value(s.field_values[i], a) * g.bank().table(j, kj).value(s.field_values[j], a);
        }
      }
    }
    EXPECT_NEAR(logit_of(ffm_forward(s, g)), z, 1e-10);
  }
}

TEST(Ffm, ZeroVectorsGiveOneHalf) {
  SeededRng rng(4);
  ModelGraph g = ModelGraph::build({3, 3, 3}, shallow_config(ModelKind::FFM, 2, false), rng);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 2; ++k) g.bank().table(i, k).value.fill(0.0);
  }
  EXPECT_EQ(ffm_forward(Sample{{1, 2, 0}, 1}, g), 0.5);
}

TEST(Dnn, InputWidthHasNoInteractionTerm) {
  SeededRng rng(5);
  const ModelGraph g = ModelGraph::build({3, 4, 5}, deep_config(ModelKind::DNN, 4), rng);
  EXPECT_EQ(g.mlp()->input_width(), 12u);
  EXPECT_EQ(g.interactions().interaction_width(), 0u);
}

TEST(Pnn, HandComposedPipeline) {
  // m=2, d=1: f = [e1, e2, e1*e2], then input BN, one relu layer with BN, head.
  SeededRng rng(6);
  ModelConfig c = deep_config(ModelKind::PNN, 1);
  c.mlp.hidden = {2};
  ModelGraph g = ModelGraph::build({3, 3}, c, rng);
  Mlp& mlp = *g.mlp();
  auto& in_bn = mlp.input_bn()->state();
  for (std::size_t u = 0; u < 3; ++u) {
    in_bn.running_mean(0, u) = rng.uniform(-0.2, 0.2);
    in_bn.running_var(0, u) = rng.uniform(0.5, 2.0);
    in_bn.gamma.value(0, u) = rng.uniform(0.5, 1.5);
    in_bn.beta.value(0, u) = rng.uniform(-0.5, 0.5);
  }
  auto& layer = mlp.layers()[0];
  auto& bn = layer.bn->state();
  for (std::size_t u = 0; u < 2; ++u) {
    bn.running_mean(0, u) = rng.uniform(0.0, 0.3);
    bn.running_var(0, u) = rng.uniform(0.5, 2.0);
  }
  const Sample s{{1, 2}, 0};
  const double e1 = g.bank().table(0, 0).value(1, 0);
  const double e2 = g.bank().table(1, 0).value(2, 0);
  const double f[3] = {e1, e2, e1 * e2};
  double h0[3];
  for (int u = 0; u < 3; ++u) {
    h0[u] = in_bn.gamma.value(0, u) * (f[u] - in_bn.running_mean(0, u)) / std::sqrt(in_bn.running_var(0, u) + 1e-5) +
            in_bn.beta.value(0, u);
  }
  double z = mlp.head_bias().value(0, 0);
  for (int o = 0; o < 2; ++o) {
    double a = layer.bias.value(0, o);
    for (int u = 0; u < 3; ++u) a += layer.weight.value(o, u) * h0[u];
    a = std::max(0.0, a);
    const double h1 =
        bn.gamma.value(0, o) * (a - bn.running_mean(0, o)) / std::sqrt(bn.running_var(0, o) + 1e-5) + bn.beta.value(0, o);
    z += mlp.head_weight().value(0, o) * h1;
  }
  EXPECT_NEAR(g.predict(s), 1.0 / (1.0 + std::exp(-z)), 1e-14);
}

TEST(DeepModels, ZeroBankGivesConstantOutput) {
  for (ModelKind kind : {ModelKind::DNN, ModelKind::PNN, ModelKind::ONN}) {
    SeededRng rng(7);
    ModelConfig c = deep_config(kind, 3);
    c.init_scale = 0.0;
    const std::vector<std::size_t> cards{4, 4, 4};
    const ModelGraph g = ModelGraph::build(cards, c, rng);
    const auto samples = random_samples(cards, 10, rng);
    const auto p = g.predict(batch_of(samples));
    for (double v : p) EXPECT_EQ(v, p[0]) << to_string(kind);
  }
}

TEST(DeepModels, KindChecksInForwardWrappers) {
  SeededRng rng(8);
  const std::vector<std::size_t> cards{3, 3};
  ModelGraph pnn = ModelGraph::build(cards, deep_config(ModelKind::PNN, 2), rng);
  const auto samples = random_samples(cards, 4, rng);
  EXPECT_NO_THROW(pnn_forward(batch_of(samples), pnn, Mode::Infer));
  EXPECT_THROW(onn_forward(batch_of(samples), pnn, Mode::Infer), ConfigError);
  EXPECT_THROW(fm_forward(samples[0], pnn), ConfigError);
}

TEST(DeepModels, InferIsDeterministicAndBatchIndependent) {
  for (ModelKind kind : {ModelKind::DNN, ModelKind::PNN, ModelKind::ONN}) {
    SeededRng rng(9);
    const std::vector<std::size_t> cards{5, 4, 3, 6};
    ModelGraph g = ModelGraph::build(cards, deep_config(kind, 3), rng);
    const auto samples = random_samples(cards, 12, rng);
    g.forward(batch_of(samples), Mode::Train);  // move the running statistics off their defaults
    const auto all = g.predict(batch_of(samples));
    EXPECT_EQ(all, g.predict(batch_of(samples)));
    for (std::size_t k = 0; k < samples.size(); ++k) EXPECT_EQ(g.predict(samples[k]), all[k]);
  }
}

TEST(ModelGraph, ConfigErrors) {
  SeededRng rng(1);
  ModelConfig c = shallow_config(ModelKind::FM, 2, true);
  c.variant = ProductVariant::Outer;
  EXPECT_THROW(ModelGraph::build({3, 3}, c, rng), ConfigError);
  ModelConfig p = deep_config(ModelKind::PNN, 2);
  p.copy_dim = 5;
  EXPECT_THROW(ModelGraph::build({3, 3}, p, rng), ConfigError);
  ModelConfig o = deep_config(ModelKind::ONN, 2);
  o.copy_dim = 5;
  const ModelGraph g = ModelGraph::build({3, 3}, o, rng);
  EXPECT_EQ(g.mlp()->input_width(), 5u * 2 + 1);
  EXPECT_THROW(ModelGraph::build({3}, deep_config(ModelKind::ONN, 2), rng), ConfigError);
}

TEST(ModelGraph, BankSizeFormulas) {
  SeededRng rng(10);
  const std::vector<std::size_t> cards{3, 5, 2, 4};
  for (ModelKind kind : {ModelKind::FM, ModelKind::FFM, ModelKind::DNN, ModelKind::PNN, ModelKind::ONN}) {
    const ModelGraph g = ModelGraph::build(cards, deep_config(kind, 3), rng);
    std::size_t sum = 0;
    for (auto c : cards) sum += c;
    const std::size_t slots = kind == ModelKind::ONN ? 4 : kind == ModelKind::FFM ? 3 : 1;
    EXPECT_EQ(g.bank().parameter_count(), sum * slots * 3) << to_string(kind);
  }
}

TEST(Tying, OnnWithIdenticalSlotsEqualsPnn) {
  SeededRng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(5);
    const std::size_t d = 1 + rng.uniform_index(4);
    const auto cards = random_cards(m, 6, rng);
    for (auto v : {ProductVariant::Inner, ProductVariant::Outer, ProductVariant::Subnet, ProductVariant::InnerOuter}) {
      ModelConfig c = deep_config(ModelKind::ONN, d);
      c.variant = v;
      ModelGraph onn = ModelGraph::build(cards, c, rng);
      make_slots_identical(onn);
      const ModelGraph pnn = tie_embeddings(onn);
      ASSERT_EQ(pnn.kind(), ModelKind::PNN);
      const auto samples = random_samples(cards, 16, rng);
      const auto a = onn.predict(batch_of(samples));
      const auto b = pnn.predict(batch_of(samples));
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
  }
}

TEST(Tying, FfmWithIdenticalVectorsEqualsFm) {
  SeededRng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(5);
    const std::size_t d = 1 + rng.uniform_index(4);
    const auto cards = random_cards(m, 6, rng);
    ModelGraph ffm = ModelGraph::build(cards, shallow_config(ModelKind::FFM, d, trial % 2 == 0), rng);
    make_slots_identical(ffm);
    const ModelGraph fm = tie_embeddings(ffm);
    ASSERT_EQ(fm.kind(), ModelKind::FM);
    for (const Sample& s : random_samples(cards, 16, rng)) EXPECT_EQ(ffm_forward(s, ffm), fm_forward(s, fm));
  }
}

TEST(Tying, HeterogeneousSlotsAndWrongKindsThrow) {
  SeededRng rng(13);
  ModelConfig c = deep_config(ModelKind::ONN, 2);
  c.copy_dim = 3;
  const ModelGraph onn = ModelGraph::build({3, 3, 3}, c, rng);
  EXPECT_THROW(tie_embeddings(onn), ConfigError);
  const ModelGraph pnn = ModelGraph::build({3, 3}, deep_config(ModelKind::PNN, 2), rng);
  EXPECT_THROW(tie_embeddings(pnn), ConfigError);
}

TEST(Tying, ModelsDivergeAfterOneDifferingStep) {
  SeededRng rng(14);
  const std::vector<std::size_t> cards{4, 5, 3};
  ModelGraph onn = ModelGraph::build(cards, deep_config(ModelKind::ONN, 3), rng);
  make_slots_identical(onn);
  ModelGraph pnn = tie_embeddings(onn);
  const auto probe = random_samples(cards, 8, rng);
  const auto before_a = onn.predict(batch_of(probe));
  const auto before_b = pnn.predict(batch_of(probe));
  for (std::size_t k = 0; k < probe.size(); ++k) ASSERT_NEAR(before_a[k], before_b[k], 1e-12);

  const auto data_a = random_samples(cards, 8, rng);
  const auto data_b = random_samples(cards, 8, rng);
  AdamState sa(onn.params(), {});
  AdamState sb(pnn.params(), {});
  loss_and_gradient(onn, batch_of(data_a));
  adam_step(onn.params(), sa);
  loss_and_gradient(pnn, batch_of(data_b));
  adam_step(pnn.params(), sb);
  const auto after_a = onn.predict(batch_of(probe));
  const auto after_b = pnn.predict(batch_of(probe));
  double max_diff = 0;
  for (std::size_t k = 0; k < probe.size(); ++k) max_diff = std::max(max_diff, std::abs(after_a[k] - after_b[k]));
  EXPECT_GT(max_diff, 1e-9);
}
