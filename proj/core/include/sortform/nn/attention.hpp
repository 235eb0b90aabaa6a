#pragma once

#include <vector>

#include "sortform/permutation.hpp"

namespace sortform::nn {

// Multi-head self-attention in row convention: X is T x d, one frame per
// row. Head i uses columns [i*d/h, (i+1)*d/h) of wq, wk and wv; the
// concatenated head outputs (T x d) are projected by wo (d x d).
struct MhaParams {
  Matrix wq;
  Matrix wk;
  Matrix wv;
  Matrix wo;
  int heads = 1;

  int model_dim() const noexcept { return static_cast<int>(wq.rows()); }
  int head_dim() const noexcept { return model_dim() / heads; }

  // Throws ValidationError on inconsistent shapes or d % h != 0.
  void validate() const;
};

// Intermediate values kept for the backward pass.
struct MhaCache {
  Matrix x;
  Matrix q, k, v;
  Matrix concat;
  std::vector<Matrix> weights;  // per head, T x T, rows sum to 1
};

struct MhaGrads {
  Matrix wq, wk, wv, wo;
};

// Row-wise numerically stable softmax.
Matrix softmax_rows(const Matrix &s);

Matrix mha_forward(const Matrix &x, const MhaParams &params);
Matrix mha_forward(const Matrix &x, const MhaParams &params, MhaCache &cache);

// Per-head attention weight matrices for inspection.
std::vector<Matrix> mha_attention_weights(const Matrix &x, const MhaParams &params);

// Accumulates parameter gradients into `grads` and returns dL/dX.
Matrix mha_backward(const MhaParams &params, const MhaCache &cache, const Matrix &d_out,
                    MhaGrads &grads);

}  // namespace sortform::nn
