#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sortform/errors.hpp"
#include "sortform/kernels.hpp"

namespace sortform {
namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

PosteriorMatrix random_posteriors(Eigen::Index k, Eigen::Index t, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(k, t);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return PosteriorMatrix(m);
}

TEST(KernelBank, ExactQuarterTurns) {
  const auto b = build_kernel_bank(2, 4);
  EXPECT_EQ(b.gamma()(0, 0), 1.0);
  EXPECT_EQ(b.gamma()(1, 1), 0.0);
  EXPECT_EQ(b.gamma().row(0), (Matrix(1, 4) << 1, 0, -1, 0).finished());
}

TEST(KernelBank, SampledSine) {
  const auto b = build_kernel_bank(3, 8);
  for (int k = 1; k <= 3; ++k) {
    for (int z = 1; z <= 8; ++z) {
      EXPECT_NEAR(b.gamma()(k - 1, z - 1), std::sin(2 * std::numbers::pi * k * z / 8.0), 1e-15);
    }
  }
  EXPECT_NEAR(b.gamma()(0, 0), std::sqrt(0.5), 1e-15);
  EXPECT_LE(b.gamma().cwiseAbs().maxCoeff(), 1.0);
}

TEST(KernelBank, RejectsBadSizes) {
  EXPECT_THROW(build_kernel_bank(0, 4), ValidationError);
  EXPECT_THROW(build_kernel_bank(2, 0), ValidationError);
  EXPECT_THROW(KernelBank(Matrix::Constant(1, 2, 1.5)), ValidationError);
}

TEST(EncodeSpeakers, ZeroBankIsRemovable) {
  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(16, 10, rng);
  const auto p = random_posteriors(3, 10, rng);
  const auto bank = build_kernel_bank(3, 16).nullified();
  EXPECT_EQ(encode_speakers(a, p, bank), normalize_columns(a));
}

TEST(EncodeSpeakers, SilentFrameIsNormalizedState) {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(8, 4, rng);
  Matrix pm = Matrix::Constant(2, 4, 0.7);
  pm.col(2).setZero();
  const Matrix out = encode_speakers(a, PosteriorMatrix(pm), build_kernel_bank(2, 8));
  EXPECT_LT((out.col(2) - a.col(2) / a.col(2).norm()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EncodeSpeakers, HandExample) {
  const Matrix a = (Matrix(4, 1) << 0, 1, 0, 0).finished();
  const Matrix out = encode_speakers(a, PosteriorMatrix(Matrix::Ones(1, 1)), build_kernel_bank(1, 4));
  EXPECT_EQ(out, (Matrix(4, 1) << 1, 1, -1, 0).finished());
}

TEST(EncodeSpeakers, ZeroColumnPassesThrough) {
  const Matrix a = Matrix::Zero(4, 2);
  const Matrix out = encode_speakers(a, PosteriorMatrix(Matrix::Zero(1, 2)), build_kernel_bank(1, 4));
  EXPECT_EQ(out, a);
}

TEST(EncodeSpeakers, ShapeMismatch) {
  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(8, 4, rng);
  EXPECT_THROW(encode_speakers(a, random_posteriors(2, 4, rng), build_kernel_bank(2, 6)), ValidationError);
  EXPECT_THROW(encode_speakers(a, random_posteriors(3, 4, rng), build_kernel_bank(2, 8)), ValidationError);
  EXPECT_THROW(encode_speakers(a, random_posteriors(2, 5, rng), build_kernel_bank(2, 8)), ValidationError);
}

TEST(StripSpeakers, RoundTrip) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_matrix(12, 9, rng);
    const auto p = random_posteriors(4, 9, rng);
    const auto bank = build_kernel_bank(4, 12);
    EXPECT_LT((strip_speakers(encode_speakers(a, p, bank), p, bank) - normalize_columns(a)).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(StripSpeakers, ZeroPosteriorsIsIdentity) {
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(6, 3, rng);
  EXPECT_EQ(strip_speakers(x, PosteriorMatrix(Matrix::Zero(2, 3)), build_kernel_bank(2, 6)), x);
}

TEST(EncodeSpeakers, LinearInPosteriors) {
  std::mt19937_64 rng(6);
  const Matrix a = random_matrix(10, 5, rng);
  const auto bank = build_kernel_bank(3, 10);
  const Matrix p1 = 0.5 * random_posteriors(3, 5, rng).values();
  const Matrix p2 = 0.5 * random_posteriors(3, 5, rng).values();
  const Matrix diff = encode_speakers(a, PosteriorMatrix(p1 + p2), bank) - encode_speakers(a, PosteriorMatrix(p1), bank);
  EXPECT_LT((diff - bank.gamma().transpose() * p2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EncodeSpeakers, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const Matrix a = random_matrix(16, 6, rng);
  const auto bank = build_kernel_bank(4, 16);
  const Matrix p = 0.5 * random_posteriors(4, 6, rng).values().array() + 0.25;
  const double h = 1e-6;
  for (int k = 0; k < 4; ++k) {
    for (int t = 0; t < 6; ++t) {
      Matrix up = p, dn = p;
      up(k, t) += h;
      dn(k, t) -= h;
      const Matrix fd = (encode_speakers(a, PosteriorMatrix(up), bank) - encode_speakers(a, PosteriorMatrix(dn), bank)) / (2 * h);
      Matrix want = Matrix::Zero(16, 6);
      want.col(t) = speaker_jacobian(bank, k);
      EXPECT_LT((fd - want).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

}  // namespace
}  // namespace sortform
