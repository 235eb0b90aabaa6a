#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sortform/nn/model.hpp"
#include "sortform/objectives.hpp"

namespace sortform::nn {

struct TrainConfig {
  LossSpec loss = LossSpec::sort();
  int steps = 1000;
  int batch_size = 8;
  double peak_lr = 2e-3;
  int warmup_steps = 100;
  double min_lr = 1e-6;
  double weight_decay = 1e-3;
  double dropout = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Linear warmup to the peak, then peak * sqrt(warmup / step), floored.
// `step` is 1-based.
double learning_rate(const TrainConfig &cfg, int step);

struct TrainingExample {
  FeatureSequence features;
  PresenceMatrix truth;
};

struct TrainHistory {
  std::vector<double> loss;  // batch-mean loss per step
  std::vector<double> lr;
};

struct TrainResult {
  ToyDiarizerParams params;
  TrainHistory history;
};

// Called after every step with (step, batch loss).
using StepCallback = std::function<void(int, double)>;

// Adam with decoupled weight decay on matrices (biases and position
// tables are not decayed). Throws ValidationError on an empty dataset or
// inconsistent D / K, and DivergenceError on a non-finite loss.
TrainResult train(const std::vector<TrainingExample> &dataset, ToyDiarizerParams init,
                  const TrainConfig &cfg, const StepCallback &on_step = {});
TrainResult train(const std::vector<TrainingExample> &dataset, const ModelShape &shape,
                  const TrainConfig &cfg, const StepCallback &on_step = {});

// Mean loss over `batch` and its gradient accumulated into `grads`.
// Permutations (eta, pi*) are chosen at the current parameters.
double batch_loss_and_gradient(const ToyDiarizerParams &params,
                               const std::vector<TrainingExample> &batch, const LossSpec &loss,
                               ToyDiarizerParams &grads, Dropout dropout = {});

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  bool finite = true;
};

// Backprop vs central differences on `coordinates` random parameters.
// Dropout is off and permutations are frozen at the base point.
// Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const ToyDiarizerParams &params,
                           const std::vector<TrainingExample> &batch, const LossSpec &loss,
                           std::size_t coordinates = 100, std::uint64_t seed = 0,
                           double step = 1e-5, double floor = 1e-6);

struct AtoEvaluation {
  // Fraction of sessions whose output rows, aligned to the truth by the
  // PIL permutation, follow arrival-time order.
  double aligned_compliance = 0.0;
  // Fraction whose binarized outputs pass is_ato_sorted on their own.
  double raw_compliance = 0.0;
  std::size_t sessions = 0;
  std::size_t aligned_hits = 0;
};

AtoEvaluation evaluate_ato(const ToyDiarizerParams &params,
                           const std::vector<TrainingExample> &heldout);

}  // namespace sortform::nn
