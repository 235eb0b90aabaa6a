#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sortform/errors.hpp"
#include "sortform/objectives.hpp"
#include "sortform/sorting.hpp"

namespace sortform {
namespace {

PresenceMatrix Y(const Matrix &m) { return PresenceMatrix(m, FrameGrid(0.08, static_cast<int>(m.cols()))); }
PosteriorMatrix P(const Matrix &m) { return PosteriorMatrix(m, FrameGrid(0.08, static_cast<int>(m.cols()))); }

Matrix clamped(const Matrix &y) {
  return y.unaryExpr([](double v) { return v > 0.5 ? 1.0 - kProbClamp : kProbClamp; });
}

Matrix interior_probs(int k, int t, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  Matrix p(k, t);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < t; ++j) p(i, j) = u(rng);
  }
  return p;
}

// Loss value as a function of P with permutations held at their value in p0.
double frozen_value(const Matrix &y, const Matrix &p0, const Matrix &p, const LossSpec &spec) {
  const Permutation eta = sort_permutation(y);
  const Permutation pi = pil_permutation(y, p0);
  switch (spec.kind) {
    case LossKind::kBce: return bce_mean(y, p);
    case LossKind::kSort: return bce_mean(eta.apply_rows(y), p);
    case LossKind::kPil: return bce_mean(pi.apply_rows(y), p);
    case LossKind::kHybrid: {
      const double a = spec.hybrid.alpha();
      return a * bce_mean(eta.apply_rows(y), p) + (1 - a) * bce_mean(pi.apply_rows(y), p);
    }
  }
  return 0.0;
}

TEST(Bce, Examples) {
  EXPECT_NEAR(bce(1, 0.5), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce(0, 0.0), 0.0, 1e-6);
  EXPECT_NEAR(bce(1, 0.9), 0.105361, 1e-6);
  EXPECT_NEAR(bce(1, 0.9), -std::log(0.9), 1e-15);
  EXPECT_THROW(bce(0.5, 0.5), ValidationError);
}

TEST(Bce, ClampKeepsHardMistakesFinite) {
  EXPECT_NEAR(bce(1, 0.0), -std::log(kProbClamp), 1e-9);
  EXPECT_TRUE(std::isfinite(bce(0, 1.0)));
}

TEST(BceMatrix, Examples) {
  const Matrix y = (Matrix(2, 2) << 1, 0, 0, 1).finished();
  EXPECT_LE(bce_matrix(Y(y), P(clamped(y))).value, 1e-6);
  EXPECT_NEAR(bce_matrix(Y(y), P(Matrix::Constant(2, 2, 0.5))).value, std::log(2.0), 1e-12);
  const Matrix p = (Matrix(2, 2) << 0.9, 0.1, 0.1, 0.9).finished();
  const auto r = bce_matrix(Y(y), P(p));
  EXPECT_NEAR(r.value, 0.105361, 1e-6);
  EXPECT_TRUE(r.permutation_used.is_identity());
  EXPECT_THROW(bce_matrix(Y(y), P(Matrix::Constant(2, 3, 0.5))), ValidationError);
}

TEST(PilLoss, SwappedPrediction) {
  const Matrix y = (Matrix(2, 2) << 1, 0, 0, 1).finished();
  const auto r = pil_loss(Y(y), P((Matrix(2, 2) << 0, 1, 1, 0).finished()));
  EXPECT_LT(r.value, 1e-6);
  EXPECT_EQ(r.permutation_used.mapping(), (std::vector<int>{1, 0}));
}

TEST(PilLoss, PerfectPredictionKeepsIdentity) {
  const Matrix y = (Matrix(2, 3) << 1, 1, 0, 0, 1, 1).finished();
  const auto r = pil_loss(Y(y), P(clamped(y)));
  EXPECT_LT(r.value, 1e-6);
  EXPECT_TRUE(r.permutation_used.is_identity());
}

TEST(PilLoss, EqualsExhaustiveMinimum) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + trial % 5;
    const Matrix y = oracle::random_binary(k, 15, rng);
    const Matrix p = oracle::random_probs(k, 15, rng);
    const auto want = oracle::exhaustive_pil(y, p);
    const auto got = pil_loss(Y(y), P(p));
    ASSERT_NEAR(got.value, want.value, 1e-12);
    double mean = 0.0;
    for (double v : got.per_speaker) mean += v;
    EXPECT_NEAR(got.value, mean / k, 1e-12);
  }
}

TEST(SortLoss, Examples) {
  const Matrix sorted = (Matrix(2, 6) << 1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1, 0).finished();
  EXPECT_LT(sort_loss(Y(sorted), P(clamped(sorted))).value, 1e-6);

  const Matrix swapped_pred = clamped(Permutation({1, 0}).apply_rows(sorted));
  const double s = sort_loss(Y(sorted), P(swapped_pred)).value;
  const double q = pil_loss(Y(sorted), P(swapped_pred)).value;
  EXPECT_LT(q, 1e-6);
  EXPECT_GT(s, 0.5 * -std::log(kProbClamp) * 5.0 / 6.0 - 1e-6);

  Matrix unsorted = Matrix::Zero(2, 10);
  unsorted(0, 7) = 1;
  unsorted(1, 2) = 1;
  const auto r = sort_loss(Y(unsorted), P(clamped(Permutation({1, 0}).apply_rows(unsorted))));
  EXPECT_LT(r.value, 1e-6);
  EXPECT_EQ(r.permutation_used.mapping(), (std::vector<int>{1, 0}));
}

TEST(SortLoss, MatchesOracleOnSortedTruth) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix y = oracle::random_binary(4, 20, rng, 0.1);
    const Matrix p = oracle::random_probs(4, 20, rng);
    const auto order = oracle::arrival_order(y);
    EXPECT_NEAR(sort_loss(Y(y), P(p)).value, oracle::permuted_mean_bce(y, p, order), 1e-12);
  }
}

TEST(Losses, Dominance) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + trial % 5;
    const Matrix y = oracle::random_binary(k, 30, rng, 0.2);
    const Matrix p = oracle::random_probs(k, 30, rng);
    ASSERT_LE(pil_loss(Y(y), P(p)).value, sort_loss(Y(y), P(p)).value + 1e-12);
  }
}

TEST(Losses, PilIsPermutationNeutral) {
  std::mt19937_64 rng(34);
  const Matrix y = oracle::random_binary(4, 25, rng);
  const Matrix p = oracle::random_probs(4, 25, rng);
  const double base = pil_loss(Y(y), P(p)).value;
  std::vector<int> perm{0, 1, 2, 3};
  do {
    EXPECT_DOUBLE_EQ(pil_loss(Y(Permutation(perm).apply_rows(y)), P(p)).value, base);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(Losses, SortIsPermutationNeutralWithDistinctArrivals) {
  std::mt19937_64 rng(35);
  Matrix y = oracle::random_binary(3, 25, rng);
  y.leftCols(3).setZero();
  y(0, 2) = y(1, 0) = y(2, 1) = 1.0;
  const Matrix p = oracle::random_probs(3, 25, rng);
  const double base = sort_loss(Y(y), P(p)).value;
  std::vector<int> perm{0, 1, 2};
  do {
    EXPECT_DOUBLE_EQ(sort_loss(Y(Permutation(perm).apply_rows(y)), P(p)).value, base);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(Losses, CoincidenceWhenPermutationsAgree) {
  std::mt19937_64 rng(36);
  int seen = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Matrix y = oracle::random_binary(3, 20, rng, 0.15);
    const Matrix p = oracle::random_probs(3, 20, rng);
    const auto s = sort_loss(Y(y), P(p));
    const auto q = pil_loss(Y(y), P(p));
    if (s.permutation_used == q.permutation_used) {
      ++seen;
      EXPECT_EQ(s.value, q.value);
    }
  }
  EXPECT_GT(seen, 0);
}

TEST(HybridLoss, Identity) {
  std::mt19937_64 rng(37);
  const Matrix y = oracle::random_binary(3, 40, rng);
  const Matrix p = oracle::random_probs(3, 40, rng);
  const double s = sort_loss(Y(y), P(p)).value;
  const double q = pil_loss(Y(y), P(p)).value;
  for (double a : {0.0, 0.25, 0.5, 1.0}) {
    const auto h = hybrid_loss(Y(y), P(p), HybridConfig(a));
    EXPECT_NEAR(h.value, a * s + (1 - a) * q, 1e-12);
    EXPECT_EQ(*h.sort_value, s);
    EXPECT_EQ(*h.pil_value, q);
  }
  EXPECT_EQ(hybrid_loss(Y(y), P(p), HybridConfig(1.0)).value, s);
  EXPECT_EQ(hybrid_loss(Y(y), P(p), HybridConfig(0.0)).value, q);
  EXPECT_THROW(HybridConfig(1.5), ValidationError);
  EXPECT_THROW(HybridConfig(-0.1), ValidationError);
}

TEST(LossGradient, ClosedForm) {
  const auto g = loss_gradient(Y(Matrix::Ones(1, 1)), P(Matrix::Constant(1, 1, 0.5)), LossSpec::bce());
  EXPECT_NEAR(g.values(0, 0), -2.0, 1e-12);
}

TEST(LossGradient, ZeroAtOptimumAndSaturation) {
  const Matrix y = (Matrix(2, 3) << 1, 0, 1, 0, 1, 1).finished();
  for (auto spec : {LossSpec::bce(), LossSpec::pil()}) {
    EXPECT_LT(loss_gradient(Y(y), P(clamped(y)), spec).values.cwiseAbs().maxCoeff(), 1e-6);
  }
  const auto hard = loss_gradient(Y(y), P(Matrix::Zero(2, 3)), LossSpec::bce());
  EXPECT_TRUE(hard.values.allFinite());
  EXPECT_EQ(hard.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LossGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(38);
  const double h = 1e-5;
  for (auto spec : {LossSpec::bce(), LossSpec::sort(), LossSpec::pil(), LossSpec::hybrid_with(0.5)}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix y = oracle::random_binary(3, 20, rng, 0.3);
      const Matrix p = interior_probs(3, 20, rng);
      const Matrix g = loss_gradient(Y(y), P(p), spec).values;
      double worst = 0.0;
      for (int k = 0; k < 3; ++k) {
        for (int t = 0; t < 20; ++t) {
          Matrix up = p, down = p;
          up(k, t) += h;
          down(k, t) -= h;
          const double fd = (frozen_value(y, p, up, spec) - frozen_value(y, p, down, spec)) / (2 * h);
          worst = std::max(worst, std::abs(fd - g(k, t)) / std::max(std::abs(fd), std::abs(g(k, t))));
        }
      }
      EXPECT_LT(worst, 1e-6) << to_string(spec.kind);
    }
  }
}

TEST(LossGradient, FrozenPilMatchesLiveLossAwayFromTies) {
  // Without ties the PIL argmin is locally constant, so the frozen value
  // equals the real loss near p.
  std::mt19937_64 rng(39);
  const Matrix y = oracle::random_binary(3, 20, rng, 0.3);
  const Matrix p = interior_probs(3, 20, rng);
  Matrix q = p;
  q(1, 4) += 1e-5;
  EXPECT_NEAR(pil_loss(Y(y), P(q)).value, frozen_value(y, p, q, LossSpec::pil()), 1e-15);
}

TEST(LossKind, ParseRoundTrip) {
  for (auto k : {LossKind::kBce, LossKind::kSort, LossKind::kPil, LossKind::kHybrid}) {
    EXPECT_EQ(parse_loss_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_loss_kind("mse"), ValidationError);
}

}  // namespace
}  // namespace sortform
