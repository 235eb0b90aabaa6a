#pragma once

#include "sortform/timeline.hpp"

namespace sortform {

// K x M bank of sinusoidal speaker kernels. Row k-1 holds
// sin(2*pi*k*z/M) for z = 1..M, so speaker indices inside the sine are
// 1-based and no speaker gets the all-zero kernel.
class KernelBank {
 public:
  KernelBank() = default;

  // Throws ValidationError unless gamma is finite with |entries| <= 1.
  explicit KernelBank(Matrix gamma);

  static KernelBank sinusoidal(int num_speakers, int width);

  // Same shape, all zeros. Encoding with it leaves only the normalized state.
  KernelBank nullified() const;

  const Matrix &gamma() const noexcept { return gamma_; }
  Eigen::Index num_speakers() const noexcept { return gamma_.rows(); }
  Eigen::Index width() const noexcept { return gamma_.cols(); }

 private:
  Matrix gamma_;
};

KernelBank build_kernel_bank(int num_speakers, int width);

// Columns with Euclidean norm below this pass through unscaled.
inline constexpr double kMinColumnNorm = 1e-12;

Matrix normalize_columns(const Matrix &a);

// A_tilde = column-normalized A + Gamma^T P.
Matrix encode_speakers(const Matrix &a, const PosteriorMatrix &p, const KernelBank &bank);

// A_tilde - Gamma^T P.
Matrix strip_speakers(const Matrix &a_tilde, const PosteriorMatrix &p, const KernelBank &bank);

// d A_tilde[:, t] / d p[k, t]; zero for every other column.
Vector speaker_jacobian(const KernelBank &bank, int speaker);

}  // namespace sortform
