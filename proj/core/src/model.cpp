#include "sortform/nn/model.hpp"

#include <cmath>

#include "sortform/errors.hpp"

namespace sortform::nn {
namespace {

// Logits are clipped so sigmoid stays strictly inside (0, 1).
constexpr double kLogitClamp = 30.0;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// x * sigmoid(x)
Matrix silu(const Matrix &z) {
  return z.unaryExpr([](double v) { return v * sigmoid(v); });
}

Matrix silu_grad(const Matrix &z) {
  return z.unaryExpr([](double v) {
    const double s = sigmoid(v);
    return s * (1.0 + v * (1.0 - s));
  });
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, const Dropout &d) {
  if (d.rate <= 0.0 || d.rng == nullptr) return {};
  std::bernoulli_distribution keep(1.0 - d.rate);
  const double scale = 1.0 / (1.0 - d.rate);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = keep(*d.rng) ? scale : 0.0;
  }
  return m;
}

Matrix apply_mask(const Matrix &x, const Matrix &mask) {
  return mask.size() == 0 ? x : Matrix(x.cwiseProduct(mask));
}

void check_input(const FeatureSequence &x, const ToyDiarizerParams &params) {
  if (x.dim() != params.shape.input_dim) {
    throw ValidationError("feature dimension " + std::to_string(x.dim()) +
                          " does not match model input " + std::to_string(params.shape.input_dim));
  }
  if (params.shape.positional_mode == PositionalMode::kLearned &&
      x.num_frames() > params.shape.max_frames) {
    throw ValidationError("sequence of " + std::to_string(x.num_frames()) +
                          " frames exceeds the learned position table");
  }
}

Matrix embed(const FeatureSequence &x, const ToyDiarizerParams &params, Matrix &input) {
  input = x.values().transpose();
  Matrix h = input * params.in_w;
  h.rowwise() += params.in_b.row(0);
  const auto t = input.rows();
  switch (params.shape.positional_mode) {
    case PositionalMode::kNone:
      break;
    case PositionalMode::kSinusoidal:
      h += sinusoidal_positions(t, params.shape.model_dim);
      break;
    case PositionalMode::kLearned:
      h += params.positions.topRows(t);
      break;
  }
  return h;
}

}  // namespace

FeatureSequence::FeatureSequence(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw ValidationError("feature sequence needs D >= 1 and T >= 1");
  }
  if (!values_.allFinite()) throw ValidationError("feature sequence has non-finite entries");
}

FeatureSequence FeatureSequence::permuted_frames(const Permutation &perm) const {
  return FeatureSequence(perm.apply_cols(values_));
}

std::string to_string(PositionalMode mode) {
  switch (mode) {
    case PositionalMode::kNone: return "none";
    case PositionalMode::kSinusoidal: return "sinusoidal";
    case PositionalMode::kLearned: return "learned";
  }
  return "unknown";
}

PositionalMode parse_positional_mode(const std::string &name) {
  if (name == "none") return PositionalMode::kNone;
  if (name == "sinusoidal") return PositionalMode::kSinusoidal;
  if (name == "learned") return PositionalMode::kLearned;
  throw ValidationError("unknown positional mode '" + name + "'");
}

void ToyDiarizerParams::for_each_tensor(
    const std::function<void(const std::string &, Matrix &)> &fn) {
  fn("in_w", in_w);
  fn("in_b", in_b);
  if (shape.positional_mode == PositionalMode::kLearned) fn("positions", positions);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    auto &b = blocks[l];
    fn(p + "attn.wq", b.attn.wq);
    fn(p + "attn.wk", b.attn.wk);
    fn(p + "attn.wv", b.attn.wv);
    fn(p + "attn.wo", b.attn.wo);
    fn(p + "ff1_w", b.ff1_w);
    fn(p + "ff1_b", b.ff1_b);
    fn(p + "ff2_w", b.ff2_w);
    fn(p + "ff2_b", b.ff2_b);
  }
  fn("head_w", head_w);
  fn("head_b", head_b);
}

void ToyDiarizerParams::for_each_tensor(
    const std::function<void(const std::string &, const Matrix &)> &fn) const {
  const_cast<ToyDiarizerParams *>(this)->for_each_tensor(
      [&](const std::string &name, Matrix &m) { fn(name, m); });
}

ToyDiarizerParams ToyDiarizerParams::zeros_like() const {
  ToyDiarizerParams z = *this;
  z.for_each_tensor([](const std::string &, Matrix &m) { m.setZero(); });
  return z;
}

std::size_t ToyDiarizerParams::num_parameters() const {
  std::size_t n = 0;
  for_each_tensor([&](const std::string &, const Matrix &m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

void ToyDiarizerParams::validate() const {
  const auto &s = shape;
  if (s.input_dim < 1 || s.model_dim < 1 || s.ff_dim < 1 || s.num_speakers < 1 || s.layers < 0) {
    throw ValidationError("model dimensions must be positive");
  }
  const auto expect = [](const Matrix &m, Eigen::Index r, Eigen::Index c, const char *what) {
    if (m.rows() != r || m.cols() != c) {
      throw ValidationError(std::string(what) + " has shape " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected " + std::to_string(r) + "x" +
                            std::to_string(c));
    }
  };
  expect(in_w, s.input_dim, s.model_dim, "in_w");
  expect(in_b, 1, s.model_dim, "in_b");
  if (s.positional_mode == PositionalMode::kLearned) {
    expect(positions, s.max_frames, s.model_dim, "positions");
  }
  if (static_cast<int>(blocks.size()) != s.layers) throw ValidationError("block count mismatch");
  for (const auto &b : blocks) {
    b.attn.validate();
    if (b.attn.heads != s.heads) throw ValidationError("head count mismatch");
    expect(b.attn.wq, s.model_dim, s.model_dim, "attn.wq");
    expect(b.ff1_w, s.model_dim, s.ff_dim, "ff1_w");
    expect(b.ff1_b, 1, s.ff_dim, "ff1_b");
    expect(b.ff2_w, s.ff_dim, s.model_dim, "ff2_w");
    expect(b.ff2_b, 1, s.model_dim, "ff2_b");
  }
  expect(head_w, s.model_dim, s.num_speakers, "head_w");
  expect(head_b, 1, s.num_speakers, "head_b");
  for_each_tensor([](const std::string &name, const Matrix &m) {
    if (!m.allFinite()) throw ValidationError("parameter " + name + " is not finite");
  });
}

ToyDiarizerParams init_params(const ModelShape &shape, std::uint64_t seed) {
  if (shape.heads < 1 || shape.model_dim % shape.heads != 0) {
    throw ValidationError("model_dim must be divisible by heads");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto randn = [&](Eigen::Index r, Eigen::Index c, double stddev) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = stddev * gauss(rng);
    }
    return m;
  };
  const double d = shape.model_dim;
  const double residual_scale = 1.0 / std::sqrt(2.0 * std::max(1, shape.layers));

  ToyDiarizerParams p;
  p.shape = shape;
  p.in_w = randn(shape.input_dim, shape.model_dim, 1.0 / std::sqrt(double(shape.input_dim)));
  p.in_b = Matrix::Zero(1, shape.model_dim);
  if (shape.positional_mode == PositionalMode::kLearned) {
    p.positions = randn(shape.max_frames, shape.model_dim, 0.1);
  }
  for (int l = 0; l < shape.layers; ++l) {
    EncoderBlock b;
    b.attn.heads = shape.heads;
    b.attn.wq = randn(shape.model_dim, shape.model_dim, 1.0 / std::sqrt(d));
    b.attn.wk = randn(shape.model_dim, shape.model_dim, 1.0 / std::sqrt(d));
    b.attn.wv = randn(shape.model_dim, shape.model_dim, 1.0 / std::sqrt(d));
    b.attn.wo = randn(shape.model_dim, shape.model_dim, residual_scale / std::sqrt(d));
    b.ff1_w = randn(shape.model_dim, shape.ff_dim, 1.0 / std::sqrt(d));
    b.ff1_b = Matrix::Zero(1, shape.ff_dim);
    b.ff2_w = randn(shape.ff_dim, shape.model_dim, residual_scale / std::sqrt(double(shape.ff_dim)));
    b.ff2_b = Matrix::Zero(1, shape.model_dim);
    p.blocks.push_back(std::move(b));
  }
  p.head_w = randn(shape.model_dim, shape.num_speakers, 1.0 / std::sqrt(d));
  p.head_b = Matrix::Zero(1, shape.num_speakers);
  return p;
}

Matrix sinusoidal_positions(Eigen::Index frames, Eigen::Index dim) {
  Matrix pe(frames, dim);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) * rate;
      pe(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Matrix forward_train(const FeatureSequence &x, const ToyDiarizerParams &params,
                     ForwardCache &cache, Dropout dropout) {
  check_input(x, params);
  Matrix h = embed(x, params, cache.input);
  const std::size_t layers = params.blocks.size();
  cache.attn.resize(layers);
  cache.h_in.resize(layers);
  cache.h_mid.resize(layers);
  cache.ff_pre.resize(layers);
  cache.ff_act.resize(layers);
  cache.drop_attn.resize(layers);
  cache.drop_ff.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto &b = params.blocks[l];
    cache.h_in[l] = h;
    const Matrix a = mha_forward(h, b.attn, cache.attn[l]);
    cache.drop_attn[l] = dropout_mask(a.rows(), a.cols(), dropout);
    h += apply_mask(a, cache.drop_attn[l]);
    cache.h_mid[l] = h;
    cache.ff_pre[l] = h * b.ff1_w;
    cache.ff_pre[l].rowwise() += b.ff1_b.row(0);
    cache.ff_act[l] = silu(cache.ff_pre[l]);
    Matrix f = cache.ff_act[l] * b.ff2_w;
    f.rowwise() += b.ff2_b.row(0);
    cache.drop_ff[l] = dropout_mask(f.rows(), f.cols(), dropout);
    h += apply_mask(f, cache.drop_ff[l]);
  }
  cache.h_out = h;
  cache.logits = h * params.head_w;
  cache.logits.rowwise() += params.head_b.row(0);
  cache.probs = cache.logits.transpose().unaryExpr(
      [](double z) { return sigmoid(std::clamp(z, -kLogitClamp, kLogitClamp)); });
  return cache.probs;
}

void backward(const ToyDiarizerParams &params, const ForwardCache &cache, const Matrix &d_probs,
              ToyDiarizerParams &grads) {
  const Matrix &p = cache.probs;
  Matrix d_logits(cache.logits.rows(), cache.logits.cols());
  for (Eigen::Index t = 0; t < d_logits.rows(); ++t) {
    for (Eigen::Index k = 0; k < d_logits.cols(); ++k) {
      const double z = cache.logits(t, k);
      d_logits(t, k) = std::abs(z) > kLogitClamp ? 0.0 : d_probs(k, t) * p(k, t) * (1.0 - p(k, t));
    }
  }
  grads.head_w.noalias() += cache.h_out.transpose() * d_logits;
  grads.head_b += d_logits.colwise().sum();
  Matrix dh = d_logits * params.head_w.transpose();

  for (std::size_t l = params.blocks.size(); l-- > 0;) {
    const auto &b = params.blocks[l];
    auto &g = grads.blocks[l];
    const Matrix df = apply_mask(dh, cache.drop_ff[l]);
    g.ff2_w.noalias() += cache.ff_act[l].transpose() * df;
    g.ff2_b += df.colwise().sum();
    const Matrix dz = (df * b.ff2_w.transpose()).cwiseProduct(silu_grad(cache.ff_pre[l]));
    g.ff1_w.noalias() += cache.h_mid[l].transpose() * dz;
    g.ff1_b += dz.colwise().sum();
    dh.noalias() += dz * b.ff1_w.transpose();

    const Matrix da = apply_mask(dh, cache.drop_attn[l]);
    MhaGrads mg{g.attn.wq, g.attn.wk, g.attn.wv, g.attn.wo};
    dh += mha_backward(b.attn, cache.attn[l], da, mg);
    g.attn.wq = std::move(mg.wq);
    g.attn.wk = std::move(mg.wk);
    g.attn.wv = std::move(mg.wv);
    g.attn.wo = std::move(mg.wo);
  }

  grads.in_w.noalias() += cache.input.transpose() * dh;
  grads.in_b += dh.colwise().sum();
  if (params.shape.positional_mode == PositionalMode::kLearned) {
    grads.positions.topRows(dh.rows()) += dh;
  }
}

Matrix encode(const FeatureSequence &x, const ToyDiarizerParams &params) {
  ForwardCache cache;
  forward_train(x, params, cache);
  return cache.h_out;
}

PosteriorMatrix forward(const FeatureSequence &x, const ToyDiarizerParams &params, double frame_len_s) {
  ForwardCache cache;
  Matrix p = forward_train(x, params, cache);
  const auto frames = static_cast<int>(p.cols());
  return PosteriorMatrix(std::move(p), FrameGrid(frame_len_s, frames));
}

PresenceMatrix binarize(const PosteriorMatrix &p, double threshold) {
  Matrix y = (p.values().array() > threshold).cast<double>().matrix();
  return PresenceMatrix(std::move(y), p.grid());
}

double equivariance_residual(const ToyDiarizerParams &params, const FeatureSequence &x,
                             const Permutation &perm) {
  const Matrix direct = perm.apply_cols(forward(x, params).values());
  const Matrix permuted = forward(x.permuted_frames(perm), params).values();
  return (direct - permuted).cwiseAbs().maxCoeff();
}

Vector pooled_encoding(const FeatureSequence &x, const ToyDiarizerParams &params) {
  return encode(x, params).colwise().mean().transpose();
}

}  // namespace sortform::nn
