#include "sortform/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "sortform/assignment.hpp"
#include "sortform/errors.hpp"
#include "sortform/sorting.hpp"

namespace sortform {
namespace {

inline double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

inline double bce_unchecked(double y, double p) {
  const double q = clamp_prob(p);
  return -(y * std::log(q) + (1.0 - y) * std::log1p(-q));
}

void check_shapes(const Matrix &y, const Matrix &p) {
  if (y.rows() != p.rows() || y.cols() != p.cols()) {
    throw ValidationError("shape mismatch: truth is " + std::to_string(y.rows()) + "x" +
                          std::to_string(y.cols()) + ", posterior is " +
                          std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
  }
  if (y.rows() == 0 || y.cols() == 0) throw ValidationError("loss needs a non-empty matrix");
}

// Mean over t of bce(y_row[t], p_row[t]).
double row_bce(const Matrix &y, Eigen::Index y_row, const Matrix &p, Eigen::Index p_row) {
  double s = 0.0;
  for (Eigen::Index t = 0; t < p.cols(); ++t) s += bce_unchecked(y(y_row, t), p(p_row, t));
  return s / static_cast<double>(p.cols());
}

// per_speaker[k] = row_bce(y[perm[k]], p[k]); value = mean of those.
LossReport permuted_bce(const Matrix &y, const Matrix &p, Permutation perm) {
  LossReport r;
  r.per_speaker.resize(static_cast<std::size_t>(p.rows()));
  double total = 0.0;
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    r.per_speaker[k] = row_bce(y, perm[k], p, k);
    total += r.per_speaker[k];
  }
  r.value = total / static_cast<double>(p.rows());
  r.permutation_used = std::move(perm);
  return r;
}

}  // namespace

HybridConfig::HybridConfig(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("hybrid alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kBce: return "bce";
    case LossKind::kSort: return "sort";
    case LossKind::kPil: return "pil";
    case LossKind::kHybrid: return "hybrid";
  }
  return "unknown";
}

LossKind parse_loss_kind(const std::string &name) {
  if (name == "bce") return LossKind::kBce;
  if (name == "sort") return LossKind::kSort;
  if (name == "pil") return LossKind::kPil;
  if (name == "hybrid") return LossKind::kHybrid;
  throw ValidationError("unknown loss kind '" + name + "'");
}

double bce(double y, double p) {
  if (y != 0.0 && y != 1.0) throw ValidationError("bce label must be 0 or 1");
  if (!std::isfinite(p)) throw ValidationError("bce probability must be finite");
  return bce_unchecked(y, p);
}

double bce_mean(const Matrix &target, const Matrix &p) {
  check_shapes(target, p);
  return permuted_bce(target, p, Permutation::identity(p.rows())).value;
}

Matrix bce_mean_gradient(const Matrix &target, const Matrix &p) {
  check_shapes(target, p);
  if (!p.allFinite()) throw ValidationError("gradient requested at non-finite posteriors");
  const double norm = 1.0 / static_cast<double>(p.rows() * p.cols());
  Matrix g(p.rows(), p.cols());
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    for (Eigen::Index t = 0; t < p.cols(); ++t) {
      const double q = p(k, t);
      g(k, t) = (q <= kProbClamp || q >= 1.0 - kProbClamp)
                    ? 0.0
                    : (q - target(k, t)) / (q * (1.0 - q)) * norm;
    }
  }
  return g;
}

Permutation pil_permutation(const Matrix &y, const Matrix &p) {
  check_shapes(y, p);
  // cost(k, j): prediction row k against truth row j.
  Matrix cost(p.rows(), p.rows());
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) cost(k, j) = row_bce(y, j, p, k);
  }
  return solve_lsap(CostMatrix(std::move(cost))).perm;
}

Permutation sort_permutation(const Matrix &y) {
  return comparison_key_sort(arrival_times(y, 0.0));
}

LossReport bce_matrix(const PresenceMatrix &y, const PosteriorMatrix &p) {
  check_shapes(y.values(), p.values());
  return permuted_bce(y.values(), p.values(), Permutation::identity(p.num_speakers()));
}

LossReport pil_loss(const PresenceMatrix &y, const PosteriorMatrix &p) {
  Permutation pi = pil_permutation(y.values(), p.values());
  LossReport r = permuted_bce(y.values(), p.values(), std::move(pi));
  r.pil_value = r.value;
  return r;
}

LossReport sort_loss(const PresenceMatrix &y, const PosteriorMatrix &p) {
  check_shapes(y.values(), p.values());
  LossReport r = permuted_bce(y.values(), p.values(), sort_permutation(y.values()));
  r.sort_value = r.value;
  return r;
}

LossReport hybrid_loss(const PresenceMatrix &y, const PosteriorMatrix &p, const HybridConfig &cfg) {
  const LossReport s = sort_loss(y, p);
  const LossReport q = pil_loss(y, p);
  const double a = cfg.alpha();
  LossReport r;
  r.value = a * s.value + (1.0 - a) * q.value;
  r.per_speaker.resize(s.per_speaker.size());
  for (std::size_t k = 0; k < r.per_speaker.size(); ++k) {
    r.per_speaker[k] = a * s.per_speaker[k] + (1.0 - a) * q.per_speaker[k];
  }
  r.permutation_used = s.permutation_used;
  r.pil_permutation = q.permutation_used;
  r.sort_value = s.value;
  r.pil_value = q.value;
  return r;
}

LossReport evaluate_loss(const PresenceMatrix &y, const PosteriorMatrix &p, const LossSpec &spec) {
  switch (spec.kind) {
    case LossKind::kBce: return bce_matrix(y, p);
    case LossKind::kSort: return sort_loss(y, p);
    case LossKind::kPil: return pil_loss(y, p);
    case LossKind::kHybrid: return hybrid_loss(y, p, spec.hybrid);
  }
  throw ValidationError("unknown loss kind");
}

LossGradient loss_gradient(const PresenceMatrix &y, const PosteriorMatrix &p, const LossSpec &spec) {
  const Matrix &yv = y.values();
  const Matrix &pv = p.values();
  check_shapes(yv, pv);
  switch (spec.kind) {
    case LossKind::kBce:
      return {bce_mean_gradient(yv, pv)};
    case LossKind::kSort:
      return {bce_mean_gradient(sort_permutation(yv).apply_rows(yv), pv)};
    case LossKind::kPil:
      return {bce_mean_gradient(pil_permutation(yv, pv).apply_rows(yv), pv)};
    case LossKind::kHybrid: {
      const double a = spec.hybrid.alpha();
      const Matrix gs = bce_mean_gradient(sort_permutation(yv).apply_rows(yv), pv);
      const Matrix gp = bce_mean_gradient(pil_permutation(yv, pv).apply_rows(yv), pv);
      return {a * gs + (1.0 - a) * gp};
    }
  }
  throw ValidationError("unknown loss kind");
}

}  // namespace sortform
