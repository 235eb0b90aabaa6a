#include "sortform/kernels.hpp"

#include <cmath>
#include <numbers>

#include "sortform/errors.hpp"

namespace sortform {
namespace {

// sin(2*pi*n/m) with exact zeros and unit values on quarter turns.
double sampled_sine(long long n, long long m) {
  const long long r = n % m;
  if (r == 0 || 2 * r == m) return 0.0;
  if (4 * r == m) return 1.0;
  if (4 * r == 3 * m) return -1.0;
  return std::sin(2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(m));
}

void check_encode_shapes(const Matrix &a, const PosteriorMatrix &p, const KernelBank &bank) {
  if (a.rows() != bank.width()) {
    throw ValidationError("encoder state width " + std::to_string(a.rows()) +
                          " does not match kernel width " + std::to_string(bank.width()));
  }
  if (p.num_speakers() != bank.num_speakers()) {
    throw ValidationError("posterior has " + std::to_string(p.num_speakers()) +
                          " speakers but the kernel bank has " +
                          std::to_string(bank.num_speakers()));
  }
  if (a.cols() != p.num_frames()) {
    throw ValidationError("encoder state and posterior disagree on frame count");
  }
  if (!a.allFinite()) throw ValidationError("encoder state has non-finite entries");
}

}  // namespace

KernelBank::KernelBank(Matrix gamma) : gamma_(std::move(gamma)) {
  if (!gamma_.allFinite() || (gamma_.cwiseAbs().array() > 1.0).any()) {
    throw ValidationError("kernel entries must be finite with magnitude <= 1");
  }
}

KernelBank KernelBank::sinusoidal(int num_speakers, int width) {
  if (num_speakers < 1 || width < 1) {
    throw ValidationError("kernel bank needs K >= 1 and M >= 1");
  }
  Matrix g(num_speakers, width);
  for (int k = 1; k <= num_speakers; ++k) {
    for (int z = 1; z <= width; ++z) {
      g(k - 1, z - 1) = sampled_sine(static_cast<long long>(k) * z, width);
    }
  }
  return KernelBank(std::move(g));
}

KernelBank KernelBank::nullified() const {
  return KernelBank(Matrix::Zero(gamma_.rows(), gamma_.cols()));
}

KernelBank build_kernel_bank(int num_speakers, int width) {
  return KernelBank::sinusoidal(num_speakers, width);
}

Matrix normalize_columns(const Matrix &a) {
  Matrix out = a;
  for (Eigen::Index t = 0; t < a.cols(); ++t) {
    const double n = a.col(t).norm();
    if (n >= kMinColumnNorm) out.col(t) /= n;
  }
  return out;
}

Matrix encode_speakers(const Matrix &a, const PosteriorMatrix &p, const KernelBank &bank) {
  check_encode_shapes(a, p, bank);
  return normalize_columns(a) + bank.gamma().transpose() * p.values();
}

Matrix strip_speakers(const Matrix &a_tilde, const PosteriorMatrix &p, const KernelBank &bank) {
  check_encode_shapes(a_tilde, p, bank);
  return a_tilde - bank.gamma().transpose() * p.values();
}

Vector speaker_jacobian(const KernelBank &bank, int speaker) {
  if (speaker < 0 || speaker >= bank.num_speakers()) {
    throw ValidationError("speaker index out of range");
  }
  return bank.gamma().row(speaker).transpose();
}

}  // namespace sortform
