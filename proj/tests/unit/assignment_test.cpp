#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sortform/assignment.hpp"
#include "sortform/errors.hpp"

namespace sortform {
namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto &row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Matrix random_integer_costs(int k, std::mt19937_64 &rng, int hi) {
  std::uniform_int_distribution<int> u(0, hi);
  Matrix m(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) m(i, j) = u(rng);
  }
  return m;
}

TEST(SolveLsap, ZeroDiagonal) {
  const auto a = solve_lsap(CostMatrix(mat({{0, 1}, {1, 0}})));
  EXPECT_EQ(a.perm.mapping(), (std::vector<int>{0, 1}));
  EXPECT_EQ(a.total_cost, 0.0);
}

TEST(SolveLsap, TwoByTwo) {
  const auto a = solve_lsap(CostMatrix(mat({{1, 2}, {3, 1}})));
  EXPECT_EQ(a.perm.mapping(), (std::vector<int>{0, 1}));
  EXPECT_EQ(a.total_cost, 2.0);
}

TEST(SolveLsap, MatchesBruteForceOnIntegerMatrices) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + trial % 6;
    // Small range forces many ties, exercising the lexicographic rule.
    const CostMatrix c(random_integer_costs(k, rng, trial % 2 == 0 ? 3 : 100));
    const auto fast = solve_lsap(c);
    const auto slow = brute_force_lsap(c);
    const auto ref = oracle::exhaustive_assignment(c.values());
    ASSERT_EQ(fast.total_cost, ref.value);
    ASSERT_EQ(slow.total_cost, ref.value);
    ASSERT_EQ(fast.perm.mapping(), ref.perm) << "trial " << trial;
    ASSERT_EQ(slow.perm.mapping(), ref.perm);
  }
}

TEST(SolveLsap, MatchesBruteForceOnRealMatrices) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 7;
    Matrix m(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) m(i, j) = g(rng);
    }
    const CostMatrix c(m);
    EXPECT_NEAR(solve_lsap(c).total_cost, brute_force_lsap(c).total_cost, 1e-9);
  }
}

TEST(SolveLsap, RowPermutationKeepsOptimalCost) {
  std::mt19937_64 rng(23);
  const Matrix m = random_integer_costs(5, rng, 50);
  const Permutation p({3, 0, 4, 1, 2});
  EXPECT_EQ(solve_lsap(CostMatrix(m)).total_cost, solve_lsap(CostMatrix(p.apply_rows(m))).total_cost);
}

TEST(SolveLsap, RowConstantKeepsArgmin) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix m = random_integer_costs(5, rng, 1000);
    const auto before = solve_lsap(CostMatrix(m)).perm;
    m.row(trial % 5).array() += 17.0;
    EXPECT_EQ(solve_lsap(CostMatrix(m)).perm, before);
  }
}

TEST(SolveLsap, LargerInstanceIsOptimalAgainstDualBound) {
  std::mt19937_64 rng(25);
  const Matrix m = random_integer_costs(40, rng, 1000);
  const auto a = solve_lsap(CostMatrix(m));
  EXPECT_DOUBLE_EQ(a.total_cost, assignment_cost(CostMatrix(m), a.perm));
  // Any single swap of two rows' columns cannot improve an optimum.
  for (int i = 0; i < 40; ++i) {
    for (int j = i + 1; j < 40; ++j) {
      const double now = m(i, a.perm[i]) + m(j, a.perm[j]);
      const double swapped = m(i, a.perm[j]) + m(j, a.perm[i]);
      ASSERT_LE(now, swapped);
    }
  }
}

TEST(SolveLsap, RejectsBadInput) {
  EXPECT_THROW(CostMatrix(Matrix::Zero(2, 3)), ValidationError);
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(CostMatrix{m}, ValidationError);
}

TEST(BruteForceLsap, SingleCell) {
  const auto a = brute_force_lsap(CostMatrix(mat({{5}})));
  EXPECT_EQ(a.perm.mapping(), std::vector<int>{0});
  EXPECT_EQ(a.total_cost, 5.0);
}

TEST(BruteForceLsap, TieBreakIsIdentityOnConstantCosts) {
  const auto a = brute_force_lsap(CostMatrix(Matrix::Constant(5, 5, 2.0)));
  EXPECT_TRUE(a.perm.is_identity());
  EXPECT_TRUE(solve_lsap(CostMatrix(Matrix::Constant(5, 5, 2.0))).perm.is_identity());
}

TEST(BruteForceLsap, SizeLimit) {
  EXPECT_THROW(brute_force_lsap(CostMatrix(Matrix::Zero(9, 9))), SizeError);
}

TEST(Permutation, Basics) {
  EXPECT_THROW(Permutation({0, 0}), ValidationError);
  const Permutation p({2, 0, 1});
  EXPECT_TRUE(p.compose(p.inverse()).is_identity());
  const Matrix m = (Matrix(3, 1) << 10, 11, 12).finished();
  EXPECT_EQ(p.apply_rows(m), (Matrix(3, 1) << 12, 10, 11).finished());
}

}  // namespace
}  // namespace sortform
