#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sortform/errors.hpp"
#include "sortform/sorting.hpp"

namespace sortform {
namespace {

// Rows with ones from each arrival frame onward; -1 means silent.
PresenceMatrix rows_with_arrivals(const std::vector<int> &arrivals, int t) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(arrivals.size()), t);
  for (std::size_t k = 0; k < arrivals.size(); ++k) {
    if (arrivals[k] >= 0) y(static_cast<Eigen::Index>(k), arrivals[k]) = 1.0;
  }
  return PresenceMatrix(y, FrameGrid(0.08, t));
}

std::vector<int> frames(const std::vector<ArrivalTime> &a) {
  std::vector<int> out;
  for (const auto &x : a) out.push_back(x.is_never() ? -1 : x.frame());
  return out;
}

TEST(ArrivalTime, FirstNonzero) {
  const std::vector<double> a{0, 0, 1, 1, 0}, b{1, 0, 0}, c{0, 0, 0};
  EXPECT_EQ(arrival_time(a).frame(), 2);
  EXPECT_EQ(arrival_time(b).frame(), 0);
  EXPECT_TRUE(arrival_time(c).is_never());
}

TEST(ArrivalTime, NeverOrdersLast) {
  EXPECT_LT(ArrivalTime::at(1000000), ArrivalTime::never());
  EXPECT_LT(ArrivalTime::at(1), ArrivalTime::at(2));
  EXPECT_EQ(ArrivalTime::never(), ArrivalTime::never());
}

TEST(AtsSort, HandSort) {
  EXPECT_EQ(ats_sort(rows_with_arrivals({5, 2, 9}, 10)).eta.mapping(), (std::vector<int>{1, 0, 2}));
  EXPECT_EQ(ats_sort(rows_with_arrivals({3, 3}, 10)).eta.mapping(), (std::vector<int>{0, 1}));
  EXPECT_EQ(ats_sort(rows_with_arrivals({4, -1, 1}, 10)).eta.mapping(), (std::vector<int>{2, 0, 1}));
}

TEST(AtsSort, SortedMatrixIsRowsOfEta) {
  std::mt19937_64 rng(1);
  const PresenceMatrix y(oracle::random_binary(4, 30, rng, 0.05), FrameGrid(0.08, 30));
  const auto r = ats_sort(y);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(r.sorted_matrix.values().row(i), y.values().row(r.eta[i]));
  EXPECT_EQ(r.sorted_matrix.speaker_order()[0], y.speaker_order()[r.eta[0]]);
}

TEST(AtsSort, PosteriorKeyUsesThresholdButKeepsValues) {
  const Matrix p = (Matrix(2, 3) << 0.2, 0.5, 0.9, 0.7, 0.1, 0.1).finished();
  const auto r = ats_sort(PosteriorMatrix(p));
  EXPECT_EQ(r.eta.mapping(), (std::vector<int>{1, 0}));
  EXPECT_EQ(r.sorted_matrix.values().row(0), p.row(1));
}

TEST(AtsSort, MatchesSelectionOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + trial % 6;
    const Matrix y = oracle::random_binary(k, 20, rng, 0.04);
    const auto eta = ats_sort(PresenceMatrix(y, FrameGrid(0.08, 20))).eta;
    ASSERT_EQ(eta.mapping(), oracle::arrival_order(y));
  }
}

TEST(AtsSort, Idempotent) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const PresenceMatrix y(oracle::random_binary(4, 25, rng, 0.05), FrameGrid(0.08, 25));
    EXPECT_TRUE(ats_sort(ats_sort(y).sorted_matrix).eta.is_identity());
  }
}

TEST(AtsSort, NeutralToRowPermutationWithDistinctArrivals) {
  const PresenceMatrix y = rows_with_arrivals({7, 1, 12, 4}, 20);
  const auto base = ats_sort(y).sorted_matrix.values();
  std::vector<int> perm{0, 1, 2, 3};
  do {
    EXPECT_EQ(ats_sort(y.permuted(Permutation(perm))).sorted_matrix.values(), base);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(CountingKeySort, Examples) {
  const std::vector<ArrivalTime> a{ArrivalTime::at(5), ArrivalTime::at(2), ArrivalTime::at(9)};
  EXPECT_EQ(counting_key_sort(a, 10).mapping(), (std::vector<int>{1, 0, 2}));
  const std::vector<ArrivalTime> never(3, ArrivalTime::never());
  EXPECT_TRUE(counting_key_sort(never, 10).is_identity());
  const std::vector<ArrivalTime> ties{ArrivalTime::at(0), ArrivalTime::at(0)};
  EXPECT_EQ(counting_key_sort(ties, 4).mapping(), (std::vector<int>{0, 1}));
}

TEST(CountingKeySort, KeyOutOfRange) {
  const std::vector<ArrivalTime> a{ArrivalTime::at(10)};
  EXPECT_THROW(counting_key_sort(a, 10), ValidationError);
}

TEST(CountingKeySort, EqualsComparisonSort) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 8);
    const int t = 1 + static_cast<int>(rng() % 12);
    std::vector<ArrivalTime> a;
    for (int i = 0; i < k; ++i) {
      const int v = static_cast<int>(rng() % (t + 1));
      a.push_back(v == t ? ArrivalTime::never() : ArrivalTime::at(v));
    }
    ASSERT_EQ(counting_key_sort(a, t), comparison_key_sort(a));
  }
}

TEST(IsAtoSorted, Examples) {
  auto c1 = is_ato_sorted(rows_with_arrivals({1, 4, -1}, 6));
  EXPECT_TRUE(c1.compliant);
  EXPECT_TRUE(c1.violations.empty());
  auto c2 = is_ato_sorted(rows_with_arrivals({4, 1}, 6));
  EXPECT_FALSE(c2.compliant);
  EXPECT_EQ(c2.violations, (std::vector<std::pair<int, int>>{{0, 1}}));
  auto c3 = is_ato_sorted(rows_with_arrivals({-1, 3}, 6));
  EXPECT_FALSE(c3.compliant);
  EXPECT_EQ(c3.violations, (std::vector<std::pair<int, int>>{{0, 1}}));
}

TEST(PassiveSort, Examples) {
  const Matrix sorted = (Matrix(2, 3) << 0.9, 0.1, 0.1, 0.1, 0.9, 0.1).finished();
  EXPECT_TRUE(passive_sort(PosteriorMatrix(sorted)).eta.is_identity());
  const Matrix swapped = Permutation({1, 0}).apply_rows(sorted);
  EXPECT_EQ(passive_sort(PosteriorMatrix(swapped)).eta.mapping(), (std::vector<int>{1, 0}));
}

TEST(PassiveSort, OutputAlwaysCompliant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const PosteriorMatrix p(oracle::random_probs(4, 50, rng));
    EXPECT_TRUE(is_ato_sorted(passive_sort(p).sorted_matrix).compliant);
  }
}

TEST(ArrivalTimes, ThresholdIsStrict) {
  const Matrix p = (Matrix(1, 3) << 0.5, 0.5, 0.51).finished();
  EXPECT_EQ(frames(arrival_times(p, 0.5)), std::vector<int>{2});
}

}  // namespace
}  // namespace sortform
