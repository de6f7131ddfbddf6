#include <benchmark/benchmark.h>

#include "onn/modelzoo.hpp"
#include "onn/trainer.hpp"

using namespace onn;

namespace {

struct Fixture {
  std::vector<Sample> samples;
  Batch batch;
  ModelGraph graph;

  Fixture(ModelKind kind, ProductVariant variant, std::size_t fields, std::size_t batch_size) {
    const std::vector<std::size_t> cards(fields, 100);
    SeededRng rng(1);
    samples.resize(batch_size);
    for (auto& s : samples) {
      for (std::size_t c : cards) s.field_values.push_back(static_cast<std::uint32_t>(rng.uniform_index(c)));
      s.label = static_cast<std::uint8_t>(rng.uniform_index(2));
    }
    for (std::size_t k = 0; k < samples.size(); ++k) {
      batch.samples.push_back(&samples[k]);
      batch.positions.push_back(k);
    }
    ModelConfig mc;
    mc.kind = kind;
    mc.variant = variant;
    mc.mlp.hidden = {64, 64, 64};
    graph = ModelGraph::build(cards, mc, rng);
  }
};

void BM_Forward(benchmark::State& state, ModelKind kind, ProductVariant variant) {
  Fixture f(kind, variant, static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(f.graph.forward(f.batch, Mode::Train));
  state.SetItemsProcessed(state.iterations() * 256);
}

void BM_ForwardBackward(benchmark::State& state, ModelKind kind, ProductVariant variant) {
  Fixture f(kind, variant, static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(f.graph, f.batch));
  state.SetItemsProcessed(state.iterations() * 256);
}

void BM_AdamStep(benchmark::State& state) {
  Fixture f(ModelKind::ONN, ProductVariant::Inner, static_cast<std::size_t>(state.range(0)), 256);
  loss_and_gradient(f.graph, f.batch);
  AdamState adam(f.graph.params(), {});
  for (auto _ : state) adam_step(f.graph.params(), adam);
}

}  // namespace

BENCHMARK_CAPTURE(BM_Forward, fm, ModelKind::FM, ProductVariant::Inner)->Arg(10)->Arg(39);
BENCHMARK_CAPTURE(BM_Forward, ffm, ModelKind::FFM, ProductVariant::Inner)->Arg(10)->Arg(39);
BENCHMARK_CAPTURE(BM_Forward, dnn, ModelKind::DNN, ProductVariant::Inner)->Arg(10)->Arg(39);
BENCHMARK_CAPTURE(BM_Forward, pnn_inner, ModelKind::PNN, ProductVariant::Inner)->Arg(10)->Arg(39);
BENCHMARK_CAPTURE(BM_Forward, onn_inner, ModelKind::ONN, ProductVariant::Inner)->Arg(10)->Arg(39);
BENCHMARK_CAPTURE(BM_Forward, onn_outer, ModelKind::ONN, ProductVariant::Outer)->Arg(10);
BENCHMARK_CAPTURE(BM_Forward, onn_subnet, ModelKind::ONN, ProductVariant::Subnet)->Arg(10);
BENCHMARK_CAPTURE(BM_ForwardBackward, pnn_inner, ModelKind::PNN, ProductVariant::Inner)->Arg(10)->Arg(39);
BENCHMARK_CAPTURE(BM_ForwardBackward, onn_inner, ModelKind::ONN, ProductVariant::Inner)->Arg(10)->Arg(39);
BENCHMARK(BM_AdamStep)->Arg(10);
