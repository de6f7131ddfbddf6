#include "onn/modelcheck.hpp"

#include "onn/trainer.hpp"

namespace onn {

ModelCheckInstance make_check_instance(const ModelCheckSetup& setup) {
  SeededRng rng(setup.seed);
  std::vector<std::size_t> cards(setup.fields);
  for (auto& c : cards) c = 2 + rng.uniform_index(setup.max_cardinality - 1);

  ModelConfig config;
  config.kind = setup.kind;
  config.variant = setup.variant;
  config.embed_dim = setup.dim;
  config.init_scale = setup.init_scale;
  config.shallow_terms = setup.shallow_terms;
  config.mlp.hidden = setup.hidden;

  ModelCheckInstance inst;
  SeededRng model_rng = rng.fork();
  inst.graph = ModelGraph::build(cards, config, model_rng);
  // Randomize the shallow head too so its gradients are not trivially symmetric.
  if (ShallowHead* head = inst.graph.shallow()) {
    head->bias.value(0, 0) = rng.uniform(-0.5, 0.5);
    for (auto& p : head->linear) {
      for (double& v : p.value.flat()) v = rng.uniform(-0.5, 0.5);
    }
  }

  inst.samples.resize(setup.batch);
  for (std::size_t b = 0; b < setup.batch; ++b) {
    Sample& s = inst.samples[b];
    s.field_values.resize(setup.fields);
    for (std::size_t i = 0; i < setup.fields; ++i) s.field_values[i] = static_cast<std::uint32_t>(rng.uniform_index(cards[i]));
    s.label = static_cast<std::uint8_t>(b % 2);
  }
  for (std::size_t b = 0; b < inst.samples.size(); ++b) {
    inst.batch.samples.push_back(&inst.samples[b]);
    inst.batch.positions.push_back(b);
  }
  return inst;
}

GradCheckReport check_model_gradients(ModelCheckInstance& inst, double epsilon,
                                      const std::function<void(ModelGraph&, const Batch&)>& backward_override) {
  ModelGraph& graph = inst.graph;
  if (backward_override) {
    backward_override(graph, inst.batch);
  } else {
    loss_and_gradient(graph, inst.batch);
  }
  ParamList params = graph.params();
  std::vector<DenseMatrix> numeric =
      finite_diff_gradient([&] { return batch_loss(graph, inst.batch); }, params, epsilon);
  return compare_gradients(params, numeric);
}

GradCheckReport run_model_gradcheck(const ModelCheckSetup& setup) {
  ModelCheckInstance inst = make_check_instance(setup);
  return check_model_gradients(inst, setup.epsilon);
}

}  // namespace onn
