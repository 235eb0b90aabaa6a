#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sortform/nn/attention.hpp"
#include "sortform/timeline.hpp"

namespace sortform::nn {

// D x T matrix of frame embeddings x_t.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  // Throws ValidationError unless finite with D, T >= 1.
  explicit FeatureSequence(Matrix values);

  const Matrix &values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }
  Eigen::Index num_frames() const noexcept { return values_.cols(); }

  FeatureSequence permuted_frames(const Permutation &perm) const;

 private:
  Matrix values_;
};

enum class PositionalMode { kNone, kSinusoidal, kLearned };

std::string to_string(PositionalMode mode);
PositionalMode parse_positional_mode(const std::string &name);

struct ModelShape {
  int input_dim = 16;
  int model_dim = 32;
  int heads = 4;
  int layers = 2;
  int ff_dim = 128;
  int num_speakers = 2;
  PositionalMode positional_mode = PositionalMode::kSinusoidal;
  // Table length for learned positions.
  int max_frames = 512;
};

struct EncoderBlock {
  MhaParams attn;
  Matrix ff1_w, ff1_b;  // d x F, 1 x F
  Matrix ff2_w, ff2_b;  // F x d, 1 x d
};

// Input projection, optional additive positions, residual
// attention + feed-forward blocks, and a per-frame sigmoid head.
struct ToyDiarizerParams {
  ModelShape shape;
  Matrix in_w, in_b;  // D x d, 1 x d
  Matrix positions;   // max_frames x d when learned, else empty
  std::vector<EncoderBlock> blocks;
  Matrix head_w, head_b;  // d x K, 1 x K

  // Visits every trainable tensor in a fixed order.
  void for_each_tensor(const std::function<void(const std::string &, Matrix &)> &fn);
  void for_each_tensor(const std::function<void(const std::string &, const Matrix &)> &fn) const;

  ToyDiarizerParams zeros_like() const;
  std::size_t num_parameters() const;
  void validate() const;
};

// Scaled-normal initialisation, deterministic in `seed`.
ToyDiarizerParams init_params(const ModelShape &shape, std::uint64_t seed);

// T x d sinusoidal table: sin on even, cos on odd columns.
Matrix sinusoidal_positions(Eigen::Index frames, Eigen::Index dim);

// Intermediates for one training forward pass.
struct ForwardCache {
  Matrix input;  // T x D
  std::vector<MhaCache> attn;
  std::vector<Matrix> h_in, h_mid, ff_pre, ff_act;  // per block
  std::vector<Matrix> drop_attn, drop_ff;           // masks; empty when off
  Matrix h_out;                                     // T x d
  Matrix logits;                                    // T x K
  Matrix probs;                                     // K x T
};

struct Dropout {
  double rate = 0.0;
  std::mt19937_64 *rng = nullptr;
};

// Final encoder states, T x d.
Matrix encode(const FeatureSequence &x, const ToyDiarizerParams &params);

// K x T posteriors in (0, 1). Deterministic; no dropout.
PosteriorMatrix forward(const FeatureSequence &x, const ToyDiarizerParams &params,
                        double frame_len_s = kDefaultFrameLen);

Matrix forward_train(const FeatureSequence &x, const ToyDiarizerParams &params,
                     ForwardCache &cache, Dropout dropout = {});

// Accumulates into `grads` (shaped like params) given dL/dP (K x T).
void backward(const ToyDiarizerParams &params, const ForwardCache &cache, const Matrix &d_probs,
              ToyDiarizerParams &grads);

// Entries strictly above `threshold` become 1.
PresenceMatrix binarize(const PosteriorMatrix &p, double threshold = 0.5);

// max |forward(X permuted) - forward(X) permuted| over all cells, with
// frames permuted so column i of the result is column perm[i] of the input.
double equivariance_residual(const ToyDiarizerParams &params, const FeatureSequence &x,
                             const Permutation &perm);

// Frame-mean of the final encoder states (length d).
Vector pooled_encoding(const FeatureSequence &x, const ToyDiarizerParams &params);

}  // namespace sortform::nn
