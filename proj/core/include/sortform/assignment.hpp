#pragma once

#include "sortform/permutation.hpp"

namespace sortform {

// Square matrix of finite costs; row k is assigned column perm[k].
class CostMatrix {
 public:
  // Throws ValidationError if non-square or non-finite.
  explicit CostMatrix(Matrix values);

  const Matrix &values() const noexcept { return values_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  double operator()(Eigen::Index r, Eigen::Index c) const { return values_(r, c); }

 private:
  Matrix values_;
};

struct Assignment {
  Permutation perm;
  double total_cost = 0.0;
};

// Largest size brute_force_lsap accepts.
inline constexpr std::size_t kBruteForceLimit = 8;

// O(K^3) Hungarian solver (shortest augmenting path with potentials).
// Among all optimal assignments the lexicographically smallest mapping is
// returned, found by walking the tight-edge graph of the final duals.
Assignment solve_lsap(const CostMatrix &cost);

// Exhaustive search over all K! mappings in lexicographic order; the first
// minimum wins. Throws SizeError for K > kBruteForceLimit.
Assignment brute_force_lsap(const CostMatrix &cost);

double assignment_cost(const CostMatrix &cost, const Permutation &perm);

}  // namespace sortform
