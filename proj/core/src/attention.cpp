#include "sortform/nn/attention.hpp"

#include <cmath>

#include "sortform/errors.hpp"

namespace sortform::nn {

void MhaParams::validate() const {
  const auto d = wq.rows();
  if (heads < 1 || d % heads != 0) {
    throw ValidationError("model width " + std::to_string(d) + " is not divisible by " +
                          std::to_string(heads) + " heads");
  }
  for (const Matrix *m : {&wq, &wk, &wv, &wo}) {
    if (m->rows() != d || m->cols() != d) {
      throw ValidationError("attention projections must be " + std::to_string(d) + "x" +
                            std::to_string(d));
    }
    if (!m->allFinite()) throw ValidationError("attention parameters must be finite");
  }
}

Matrix softmax_rows(const Matrix &s) {
  const Vector m = s.rowwise().maxCoeff();
  Matrix out = (s.colwise() - m).array().exp().matrix();
  const Vector z = out.rowwise().sum();
  out.array().colwise() /= z.array();
  return out;
}

Matrix mha_forward(const Matrix &x, const MhaParams &params, MhaCache &cache) {
  if (x.cols() != params.model_dim()) {
    throw ValidationError("attention input width " + std::to_string(x.cols()) +
                          " does not match model width " + std::to_string(params.model_dim()));
  }
  const int h = params.heads;
  const int dk = params.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  cache.x = x;
  cache.q.noalias() = x * params.wq;
  cache.k.noalias() = x * params.wk;
  cache.v.noalias() = x * params.wv;
  cache.concat.resize(x.rows(), params.model_dim());
  cache.weights.resize(h);
  for (int i = 0; i < h; ++i) {
    const auto qi = cache.q.middleCols(i * dk, dk);
    const auto ki = cache.k.middleCols(i * dk, dk);
    const auto vi = cache.v.middleCols(i * dk, dk);
    Matrix scores = scale * (qi * ki.transpose());
    cache.weights[i] = softmax_rows(scores);
    cache.concat.middleCols(i * dk, dk).noalias() = cache.weights[i] * vi;
  }
  return cache.concat * params.wo;
}

Matrix mha_forward(const Matrix &x, const MhaParams &params) {
  MhaCache cache;
  return mha_forward(x, params, cache);
}

std::vector<Matrix> mha_attention_weights(const Matrix &x, const MhaParams &params) {
  MhaCache cache;
  mha_forward(x, params, cache);
  return cache.weights;
}

Matrix mha_backward(const MhaParams &params, const MhaCache &cache, const Matrix &d_out,
                    MhaGrads &grads) {
  const int h = params.heads;
  const int dk = params.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  grads.wo.noalias() += cache.concat.transpose() * d_out;
  const Matrix d_concat = d_out * params.wo.transpose();

  Matrix dq(cache.q.rows(), cache.q.cols());
  Matrix dk_all(cache.k.rows(), cache.k.cols());
  Matrix dv(cache.v.rows(), cache.v.cols());
  for (int i = 0; i < h; ++i) {
    const Matrix &a = cache.weights[i];
    const auto qi = cache.q.middleCols(i * dk, dk);
    const auto ki = cache.k.middleCols(i * dk, dk);
    const auto vi = cache.v.middleCols(i * dk, dk);
    const auto dci = d_concat.middleCols(i * dk, dk);

    const Matrix da = dci * vi.transpose();
    dv.middleCols(i * dk, dk).noalias() = a.transpose() * dci;
    // Softmax Jacobian applied row-wise.
    const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
    const Matrix ds = (a.array() * (da.colwise() - row_dot).array()).matrix() * scale;
    dq.middleCols(i * dk, dk).noalias() = ds * ki;
    dk_all.middleCols(i * dk, dk).noalias() = ds.transpose() * qi;
  }
  grads.wq.noalias() += cache.x.transpose() * dq;
  grads.wk.noalias() += cache.x.transpose() * dk_all;
  grads.wv.noalias() += cache.x.transpose() * dv;
  Matrix dx = dq * params.wq.transpose();
  dx.noalias() += dk_all * params.wk.transpose();
  dx.noalias() += dv * params.wv.transpose();
  return dx;
}

}  // namespace sortform::nn
