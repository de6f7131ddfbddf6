#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "onn/datapipe.hpp"
#include "onn/metrics.hpp"
#include "onn/modelzoo.hpp"
#include "onn/numerics.hpp"

namespace onn {

struct AdamConfig {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moments shaped like each parameter, plus the step count.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const ParamList& params, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return t_; }
  const DenseMatrix& first_moment(std::size_t k) const { return m_.at(k); }
  const DenseMatrix& second_moment(std::size_t k) const { return v_.at(k); }

 private:
  friend void adam_step(const ParamList& params, AdamState& state);
  AdamConfig config_;
  std::vector<DenseMatrix> m_;
  std::vector<DenseMatrix> v_;
  std::uint64_t t_ = 0;
};

/// Bias-corrected Adam update from each Parameter::grad. Gradients are checked
/// up front: a non-finite entry throws TrainingError naming the parameter and
/// nothing is modified.
void adam_step(const ParamList& params, AdamState& state);

struct TrainConfig {
  StreamMode mode = StreamMode::Offline;
  std::size_t epochs = 1;
  std::size_t batch_size = 2500;
  AdamConfig adam;
  std::uint64_t seed = 1;
  std::size_t eval_interval = 1000;
  std::size_t eval_batch_size = 4096;
  // Empty: keep the curve in memory only.
  std::string curve_path;
};

struct CurvePoint {
  std::size_t step = 0;
  double test_logloss = 0.0;
  double test_auc = 0.0;
};

// Observation points for tests and tooling; none may mutate the graph.
struct TrainHooks {
  std::function<void(const Batch&)> on_batch;
  std::function<void(std::size_t step, double batch_loss)> on_step;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  std::size_t steps = 0;
  std::size_t epochs_run = 0;
  // Mean of the per-batch training losses of the final epoch.
  double last_epoch_loss = 0.0;
};

/// Writes `step,test_logloss,test_auc` rows, flushing after each.
class CurveWriter {
 public:
  explicit CurveWriter(const std::string& path);
  void write(const CurvePoint& point);

 private:
  std::ofstream out_;
};

std::string format_curve_point(const CurvePoint& point);

// Train-mode forward on one batch, returning the mean log loss.
double batch_loss(ModelGraph& graph, const Batch& batch, SeededRng* rng = nullptr);
// As above, then zero and accumulate gradients of the mean loss.
double loss_and_gradient(ModelGraph& graph, const Batch& batch, SeededRng* rng = nullptr);

// Inference-mode probabilities over `samples` in stored order.
std::vector<double> predict_all(const ModelGraph& graph, std::span<const Sample> samples,
                                std::size_t batch_size = 4096);
EvalReport evaluate_model(const ModelGraph& graph, std::span<const Sample> samples, std::size_t batch_size = 4096);

// Throws ConfigError when a sample does not fit the graph's fields.
void check_compatible(const ModelGraph& graph, std::span<const Sample> samples);

TrainResult train_offline(ModelGraph& graph, std::span<const Sample> train, std::span<const Sample> test,
                          const TrainConfig& config, const TrainHooks& hooks = {});
TrainResult train_online(ModelGraph& graph, std::span<const Sample> train, std::span<const Sample> test,
                         const TrainConfig& config, const TrainHooks& hooks = {});
// Dispatches on config.mode.
TrainResult train(ModelGraph& graph, std::span<const Sample> train, std::span<const Sample> test,
                  const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace onn
