#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sortform/timeline.hpp"

namespace sortform {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;

struct LossReport {
  double value = 0.0;
  // pi* for PIL, eta for sort and hybrid, identity for plain BCE.
  Permutation permutation_used;
  // Hybrid only: the PIL permutation alongside eta.
  std::optional<Permutation> pil_permutation;
  std::vector<double> per_speaker;
  std::optional<double> sort_value;
  std::optional<double> pil_value;
};

class HybridConfig {
 public:
  // Throws ValidationError unless 0 <= alpha <= 1.
  explicit HybridConfig(double alpha = 0.5);
  double alpha() const noexcept { return alpha_; }

 private:
  double alpha_;
};

enum class LossKind { kBce, kSort, kPil, kHybrid };

struct LossSpec {
  LossKind kind = LossKind::kSort;
  HybridConfig hybrid{};

  static LossSpec bce() { return {LossKind::kBce, HybridConfig{}}; }
  static LossSpec sort() { return {LossKind::kSort, HybridConfig{}}; }
  static LossSpec pil() { return {LossKind::kPil, HybridConfig{}}; }
  static LossSpec hybrid_with(double alpha) { return {LossKind::kHybrid, HybridConfig(alpha)}; }
};

std::string to_string(LossKind kind);
// Accepts "bce", "sort", "pil", "hybrid".
LossKind parse_loss_kind(const std::string &name);

// Single-cell binary cross entropy. Throws ValidationError unless y is 0 or 1.
double bce(double y, double p);

LossReport bce_matrix(const PresenceMatrix &y, const PosteriorMatrix &p);
LossReport pil_loss(const PresenceMatrix &y, const PosteriorMatrix &p);
LossReport sort_loss(const PresenceMatrix &y, const PosteriorMatrix &p);
LossReport hybrid_loss(const PresenceMatrix &y, const PosteriorMatrix &p, const HybridConfig &cfg);
LossReport evaluate_loss(const PresenceMatrix &y, const PosteriorMatrix &p, const LossSpec &spec);

// Analytic dL/dp. PIL holds the optimal permutation fixed; cells whose
// probability sits on the clamp get zero gradient.
struct LossGradient {
  Matrix values;
};

LossGradient loss_gradient(const PresenceMatrix &y, const PosteriorMatrix &p, const LossSpec &spec);

// Matrix-level kernels used by the trainer. `target` is the (already
// permuted) 0/1 truth with the same shape as `p`.
double bce_mean(const Matrix &target, const Matrix &p);
Matrix bce_mean_gradient(const Matrix &target, const Matrix &p);

// Permutation of truth rows each loss kind aligns to the prediction rows
// (identity for BCE). For hybrid this is eta; see also pil_permutation().
Permutation pil_permutation(const Matrix &y, const Matrix &p);
Permutation sort_permutation(const Matrix &y);

}  // namespace sortform
