#include "sortform/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sortform/errors.hpp"
#include "sortform/simulator.hpp"
#include "sortform/sorting.hpp"

namespace sortform::nn {
namespace {

struct WeightedTarget {
  double weight;
  Matrix target;
};

std::vector<WeightedTarget> aligned_targets(const Matrix &y, const Matrix &p, const LossSpec &loss) {
  switch (loss.kind) {
    case LossKind::kBce:
      return {{1.0, y}};
    case LossKind::kSort:
      return {{1.0, sort_permutation(y).apply_rows(y)}};
    case LossKind::kPil:
      return {{1.0, pil_permutation(y, p).apply_rows(y)}};
    case LossKind::kHybrid: {
      const double a = loss.hybrid.alpha();
      return {{a, sort_permutation(y).apply_rows(y)},
              {1.0 - a, pil_permutation(y, p).apply_rows(y)}};
    }
  }
  throw ValidationError("unknown loss kind");
}

double targets_loss(const std::vector<WeightedTarget> &targets, const Matrix &p) {
  double v = 0.0;
  for (const auto &t : targets) v += t.weight * bce_mean(t.target, p);
  return v;
}

Matrix targets_gradient(const std::vector<WeightedTarget> &targets, const Matrix &p) {
  Matrix g = Matrix::Zero(p.rows(), p.cols());
  for (const auto &t : targets) g += t.weight * bce_mean_gradient(t.target, p);
  return g;
}

std::vector<Matrix *> tensor_list(ToyDiarizerParams &p, std::vector<std::string> *names = nullptr) {
  std::vector<Matrix *> out;
  p.for_each_tensor([&](const std::string &name, Matrix &m) {
    out.push_back(&m);
    if (names != nullptr) names->push_back(name);
  });
  return out;
}

bool is_decayed(const std::string &name) {
  return name != "positions" && !(name.size() >= 2 && name.compare(name.size() - 2, 2, "_b") == 0);
}

void check_dataset(const std::vector<TrainingExample> &dataset, const ModelShape &shape) {
  if (dataset.empty()) throw ValidationError("training dataset is empty");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto &ex = dataset[i];
    if (ex.features.dim() != shape.input_dim) {
      throw ValidationError("example " + std::to_string(i) + " has feature dimension " +
                            std::to_string(ex.features.dim()) + ", model expects " +
                            std::to_string(shape.input_dim));
    }
    if (ex.truth.num_speakers() != shape.num_speakers) {
      throw ValidationError("example " + std::to_string(i) + " has " +
                            std::to_string(ex.truth.num_speakers()) + " speakers, model expects " +
                            std::to_string(shape.num_speakers));
    }
    if (ex.truth.num_frames() != ex.features.num_frames()) {
      throw ValidationError("example " + std::to_string(i) + " has mismatched frame counts");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(peak_lr > 0.0) || !(min_lr > 0.0) || min_lr > peak_lr) {
    throw ValidationError("learning rates must satisfy 0 < min_lr <= peak_lr");
  }
  if (warmup_steps < 0) throw ValidationError("warmup_steps must be >= 0");
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps must be positive");
  if (clip_norm < 0.0) throw ValidationError("clip_norm must be >= 0");
}

double learning_rate(const TrainConfig &cfg, int step) {
  const double s = std::max(1, step);
  double lr;
  if (cfg.warmup_steps > 0 && s <= cfg.warmup_steps) {
    lr = cfg.peak_lr * s / cfg.warmup_steps;
  } else {
    lr = cfg.peak_lr * std::sqrt(std::max(1.0, double(cfg.warmup_steps)) / s);
  }
  return std::max(lr, cfg.min_lr);
}

double batch_loss_and_gradient(const ToyDiarizerParams &params,
                               const std::vector<TrainingExample> &batch, const LossSpec &loss,
                               ToyDiarizerParams &grads, Dropout dropout) {
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  ForwardCache cache;
  for (const auto &ex : batch) {
    const Matrix p = forward_train(ex.features, params, cache, dropout);
    if (!p.allFinite()) throw DivergenceError("model produced non-finite posteriors");
    const auto targets = aligned_targets(ex.truth.values(), p, loss);
    total += targets_loss(targets, p);
    backward(params, cache, scale * targets_gradient(targets, p), grads);
  }
  return total * scale;
}

TrainResult train(const std::vector<TrainingExample> &dataset, ToyDiarizerParams init,
                  const TrainConfig &cfg, const StepCallback &on_step) {
  cfg.validate();
  init.validate();
  check_dataset(dataset, init.shape);

  TrainResult result{std::move(init), {}};
  ToyDiarizerParams &params = result.params;
  ToyDiarizerParams m1 = params.zeros_like();
  ToyDiarizerParams m2 = params.zeros_like();
  std::vector<std::string> names;
  const auto w = tensor_list(params, &names);
  const auto mt = tensor_list(m1);
  const auto vt = tensor_list(m2);

  std::mt19937_64 order_rng(derive_seed(cfg.seed, 0));
  std::mt19937_64 drop_rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), order_rng);
  std::size_t cursor = 0;

  std::vector<TrainingExample> batch;
  for (int step = 1; step <= cfg.steps; ++step) {
    batch.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }

    ToyDiarizerParams grads = params.zeros_like();
    const double loss = batch_loss_and_gradient(params, batch, cfg.loss, grads,
                                                Dropout{cfg.dropout, &drop_rng});
    if (!std::isfinite(loss)) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step) +
                            " (lr " + std::to_string(learning_rate(cfg, step)) + ")");
    }
    const auto g = tensor_list(grads);

    double clip = 1.0;
    if (cfg.clip_norm > 0.0) {
      double sq = 0.0;
      for (const Matrix *t : g) sq += t->squaredNorm();
      const double norm = std::sqrt(sq);
      if (!std::isfinite(norm)) {
        throw DivergenceError("non-finite gradient at step " + std::to_string(step));
      }
      if (norm > cfg.clip_norm) clip = cfg.clip_norm / norm;
    }

    const double lr = learning_rate(cfg, step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Matrix gi = clip * *g[i];
      *mt[i] = cfg.beta1 * *mt[i] + (1.0 - cfg.beta1) * gi;
      *vt[i] = cfg.beta2 * *vt[i] + (1.0 - cfg.beta2) * gi.cwiseAbs2();
      if (is_decayed(names[i])) *w[i] *= 1.0 - lr * cfg.weight_decay;
      *w[i] -= lr * ((*mt[i] / bc1).array() /
                     ((*vt[i] / bc2).array().sqrt() + cfg.adam_eps)).matrix();
    }

    result.history.loss.push_back(loss);
    result.history.lr.push_back(lr);
    if (on_step) on_step(step, loss);
  }
  return result;
}

TrainResult train(const std::vector<TrainingExample> &dataset, const ModelShape &shape,
                  const TrainConfig &cfg, const StepCallback &on_step) {
  return train(dataset, init_params(shape, cfg.seed), cfg, on_step);
}

GradCheckReport grad_check(const ToyDiarizerParams &params,
                           const std::vector<TrainingExample> &batch, const LossSpec &loss,
                           std::size_t coordinates, std::uint64_t seed, double step,
                           double floor) {
  if (batch.empty()) throw ValidationError("grad_check needs a non-empty batch");
  check_dataset(batch, params.shape);

  std::vector<std::vector<WeightedTarget>> frozen;
  ToyDiarizerParams grads = params.zeros_like();
  const double scale = 1.0 / static_cast<double>(batch.size());
  ForwardCache cache;
  for (const auto &ex : batch) {
    const Matrix p = forward_train(ex.features, params, cache);
    frozen.push_back(aligned_targets(ex.truth.values(), p, loss));
    backward(params, cache, scale * targets_gradient(frozen.back(), p), grads);
  }

  const auto fixed_loss = [&](const ToyDiarizerParams &q) {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      total += targets_loss(frozen[i], forward(batch[i].features, q).values());
    }
    return total * scale;
  };

  ToyDiarizerParams probe = params;
  const auto tensors = tensor_list(probe);
  const auto gtensors = tensor_list(grads);
  std::vector<std::size_t> offsets{0};
  for (const Matrix *t : tensors) offsets.push_back(offsets.back() + static_cast<std::size_t>(t->size()));

  GradCheckReport report;
  for (const Matrix *t : gtensors) report.finite = report.finite && t->allFinite();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, offsets.back() - 1);
  for (std::size_t c = 0; c < coordinates; ++c) {
    const std::size_t flat = pick(rng);
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
    const std::size_t ti = static_cast<std::size_t>(it - offsets.begin()) - 1;
    const Eigen::Index local = static_cast<Eigen::Index>(flat - offsets[ti]);
    double &x = tensors[ti]->data()[local];
    const double analytic = gtensors[ti]->data()[local];
    const double saved = x;
    x = saved + step;
    const double up = fixed_loss(probe);
    x = saved - step;
    const double down = fixed_loss(probe);
    x = saved;
    const double numeric = (up - down) / (2.0 * step);
    report.finite = report.finite && std::isfinite(numeric);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic - numeric) / denom);
    ++report.coordinates;
  }
  return report;
}

AtoEvaluation evaluate_ato(const ToyDiarizerParams &params,
                           const std::vector<TrainingExample> &heldout) {
  AtoEvaluation eval;
  std::size_t raw_hits = 0;
  for (const auto &ex : heldout) {
    const PosteriorMatrix p = forward(ex.features, params, ex.truth.grid().frame_len_s);
    const Permutation pi = pil_permutation(ex.truth.values(), p.values());
    if (is_ato_sorted(ex.truth.permuted(pi)).compliant) ++eval.aligned_hits;
    if (is_ato_sorted(p).compliant) ++raw_hits;
    ++eval.sessions;
  }
  if (eval.sessions > 0) {
    eval.aligned_compliance = double(eval.aligned_hits) / double(eval.sessions);
    eval.raw_compliance = double(raw_hits) / double(eval.sessions);
  }
  return eval;
}

}  // namespace sortform::nn
