#include "onn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "onn/deepnet.hpp"
#include "onn/errors.hpp"

namespace onn {

AdamState::AdamState(const ParamList& params, AdamConfig config) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Parameter* p : params) {
    m_.emplace_back(p->value.rows(), p->value.cols(), 0.0);
    v_.emplace_back(p->value.rows(), p->value.cols(), 0.0);
  }
}

void adam_step(const ParamList& params, AdamState& state) {
  if (params.size() != state.m_.size()) throw TrainingError("adam: optimizer state does not match the parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    if (p.grad.rows() != state.m_[k].rows() || p.grad.cols() != state.m_[k].cols()) {
      throw TrainingError("adam: gradient shape mismatch for " + p.name);
    }
    if (!p.grad.all_finite()) throw TrainingError("adam: non-finite gradient in " + p.name);
  }
  const AdamConfig& c = state.config_;
  ++state.t_;
  const double t = static_cast<double>(state.t_);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k]->value.flat();
    auto g = params[k]->grad.flat();
    auto m = state.m_[k].flat();
    auto v = state.v_[k].flat();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      theta[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

CurveWriter::CurveWriter(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw DataError("cannot write curve file " + path);
  out_ << "step,test_logloss,test_auc\n";
  out_.flush();
}

void CurveWriter::write(const CurvePoint& point) {
  out_ << format_curve_point(point) << '\n';
  out_.flush();
  if (!out_) throw DataError("failed writing curve file");
}

std::string format_curve_point(const CurvePoint& point) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu,%.10f,%.10f", point.step, point.test_logloss, point.test_auc);
  return buf;
}

namespace {

std::vector<double> forward_probabilities(ModelGraph& graph, const Batch& batch, SeededRng* rng) {
  std::vector<double> p = graph.forward(batch, Mode::Train, rng);
  for (double& v : p) v = sigmoid(v);
  return p;
}

double mean_batch_loss(const Batch& batch, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) s += logloss(batch.samples[b]->label, p[b]);
  return s / static_cast<double>(batch.size());
}

}  // namespace

double batch_loss(ModelGraph& graph, const Batch& batch, SeededRng* rng) {
  if (batch.empty()) throw TrainingError("empty batch");
  return mean_batch_loss(batch, forward_probabilities(graph, batch, rng));
}

double loss_and_gradient(ModelGraph& graph, const Batch& batch, SeededRng* rng) {
  if (batch.empty()) throw TrainingError("empty batch");
  std::vector<double> p = forward_probabilities(graph, batch, rng);
  const double loss = mean_batch_loss(batch, p);
  const double n = static_cast<double>(batch.size());
  std::vector<double> dlogits(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) dlogits[b] = (p[b] - batch.samples[b]->label) / n;
  graph.zero_grad();
  graph.backward(dlogits);
  return loss;
}

std::vector<double> predict_all(const ModelGraph& graph, std::span<const Sample> samples, std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const Batch& b : sequential_batches(samples, std::max<std::size_t>(batch_size, 1))) {
    std::vector<double> p = graph.predict(b);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

EvalReport evaluate_model(const ModelGraph& graph, std::span<const Sample> samples, std::size_t batch_size) {
  std::vector<double> p = predict_all(graph, samples, batch_size);
  std::vector<std::uint8_t> labels;
  labels.reserve(samples.size());
  for (const Sample& s : samples) labels.push_back(s.label);
  return evaluate(labels, p);
}

void check_compatible(const ModelGraph& graph, std::span<const Sample> samples) {
  const auto& cards = graph.cardinalities();
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const Sample& s = samples[n];
    if (s.field_values.size() != cards.size()) {
      throw ConfigError("sample " + std::to_string(n) + " has " + std::to_string(s.field_values.size()) +
                        " fields, the model expects " + std::to_string(cards.size()));
    }
    for (std::size_t i = 0; i < cards.size(); ++i) {
      if (s.field_values[i] >= cards[i]) {
        throw ConfigError("sample " + std::to_string(n) + " field " + std::to_string(i) +
                          " value index exceeds the model vocabulary");
      }
    }
    if (s.label > 1) throw ConfigError("sample " + std::to_string(n) + " has a non-binary label");
  }
}

namespace {

CurvePoint eval_point(const ModelGraph& graph, std::span<const Sample> test, std::size_t step,
                      std::size_t batch_size) {
  std::vector<double> p = predict_all(graph, test, batch_size);
  std::vector<std::uint8_t> labels;
  labels.reserve(test.size());
  for (const Sample& s : test) labels.push_back(s.label);
  CurvePoint pt;
  pt.step = step;
  pt.test_logloss = mean_logloss(labels, p);
  pt.test_auc = auc(labels, p);
  return pt;
}

TrainResult run(ModelGraph& graph, std::span<const Sample> train_set, std::span<const Sample> test,
                const TrainConfig& config, const TrainHooks& hooks) {
  if (config.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (config.eval_interval == 0) throw ConfigError("eval_interval must be at least 1");
  check_compatible(graph, train_set);
  check_compatible(graph, test);

  TrainResult result;
  const std::size_t epochs = config.mode == StreamMode::Online ? 1 : config.epochs;
  if (epochs == 0 || train_set.empty()) return result;

  SeededRng root(config.seed);
  SeededRng stream_rng = root.fork();
  SeededRng dropout_rng = root.fork();

  std::optional<CurveWriter> writer;
  if (!config.curve_path.empty()) writer.emplace(config.curve_path);
  auto record = [&](std::size_t step) {
    if (test.empty()) return;
    CurvePoint pt = eval_point(graph, test, step, config.eval_batch_size);
    result.curve.push_back(pt);
    if (writer) writer->write(pt);
  };

  ParamList params = graph.params();
  AdamState adam(params, config.adam);
  BatchStream stream(train_set, config.batch_size, config.mode, epochs, std::move(stream_rng));

  Batch batch;
  std::size_t current_epoch = 0;
  double epoch_loss = 0.0;
  std::size_t epoch_batches = 0;
  while (stream.next(batch)) {
    if (stream.epoch() != current_epoch) {
      current_epoch = stream.epoch();
      epoch_loss = 0.0;
      epoch_batches = 0;
    }
    if (hooks.on_batch) hooks.on_batch(batch);
    const double loss = loss_and_gradient(graph, batch, &dropout_rng);
    adam_step(params, adam);
    ++result.steps;
    epoch_loss += loss;
    ++epoch_batches;
    if (hooks.on_step) hooks.on_step(result.steps, loss);
    if (result.steps % config.eval_interval == 0) record(result.steps);
  }
  result.epochs_run = epochs;
  result.last_epoch_loss = epoch_batches ? epoch_loss / static_cast<double>(epoch_batches) : 0.0;
  if (result.curve.empty() || result.curve.back().step != result.steps) record(result.steps);
  return result;
}

}  // namespace

TrainResult train_offline(ModelGraph& graph, std::span<const Sample> train_set, std::span<const Sample> test,
                          const TrainConfig& config, const TrainHooks& hooks) {
  if (config.mode != StreamMode::Offline) throw ConfigError("train_offline needs mode=offline");
  return run(graph, train_set, test, config, hooks);
}

TrainResult train_online(ModelGraph& graph, std::span<const Sample> train_set, std::span<const Sample> test,
                         const TrainConfig& config, const TrainHooks& hooks) {
  if (config.mode != StreamMode::Online) throw ConfigError("train_online needs mode=online");
  return run(graph, train_set, test, config, hooks);
}

TrainResult train(ModelGraph& graph, std::span<const Sample> train_set, std::span<const Sample> test,
                  const TrainConfig& config, const TrainHooks& hooks) {
  return run(graph, train_set, test, config, hooks);
}

}  // namespace onn
