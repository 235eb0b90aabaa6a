#include "sortform/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "sortform/errors.hpp"

namespace sortform {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DualSolution {
  std::vector<int> row_to_col;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials
};

// Shortest augmenting path Hungarian algorithm. Indices are 1-based
// internally with 0 as the virtual root column.
DualSolution hungarian(const Matrix &a) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  DualSolution out;
  out.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) out.row_to_col[p[j] - 1] = j - 1;
  }
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  return out;
}

// Rewrites `row_to_col` into the lexicographically smallest perfect
// matching of the tight graph. Every optimal assignment is tight under any
// optimal dual, so this is the lexicographically smallest optimum.
void lexicographic_minimum(const std::vector<std::vector<char>> &tight,
                           std::vector<int> &row_to_col) {
  const int n = static_cast<int>(row_to_col.size());
  std::vector<int> col_owner(n);
  for (int r = 0; r < n; ++r) col_owner[row_to_col[r]] = r;
  std::vector<char> fixed_col(n, 0);

  for (int i = 0; i < n; ++i) {
    const int current = row_to_col[i];
    for (int j = 0; j < current; ++j) {
      if (!tight[i][j] || fixed_col[j]) continue;
      // Row r = owner(j) must move; look for an alternating path from r to
      // the column `current` that row i releases.
      const int r = col_owner[j];
      std::vector<int> via_row(n, -1);  // column -> row that reached it
      std::deque<int> queue{r};
      bool reached = false;
      while (!queue.empty() && !reached) {
        const int row = queue.front();
        queue.pop_front();
        for (int c = 0; c < n; ++c) {
          if (!tight[row][c] || fixed_col[c] || c == j || via_row[c] >= 0) continue;
          via_row[c] = row;
          if (c == current) {
            reached = true;
            break;
          }
          queue.push_back(col_owner[c]);
        }
      }
      if (!reached) continue;
      // Walk back: each row on the path takes the column it reached.
      int c = current;
      while (true) {
        const int row = via_row[c];
        const int prev_col = row_to_col[row];
        row_to_col[row] = c;
        col_owner[c] = row;
        if (row == r) break;
        c = prev_col;
      }
      row_to_col[i] = j;
      col_owner[j] = i;
      break;
    }
    fixed_col[row_to_col[i]] = 1;
  }
}

}  // namespace

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) {
    throw ValidationError("cost matrix must be square, got " + std::to_string(values_.rows()) +
                          "x" + std::to_string(values_.cols()));
  }
  if (!values_.allFinite()) throw ValidationError("cost matrix has non-finite entries");
}

double assignment_cost(const CostMatrix &cost, const Permutation &perm) {
  double total = 0.0;
  for (std::size_t k = 0; k < perm.size(); ++k) total += cost(k, perm[k]);
  return total;
}

Assignment solve_lsap(const CostMatrix &cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {Permutation::identity(0), 0.0};
  DualSolution sol = hungarian(cost.values());

  const double scale = std::max(1.0, cost.values().cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;
  std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      tight[r][c] = cost(r, c) - sol.u[r] - sol.v[c] <= tol ? 1 : 0;
    }
  }
  lexicographic_minimum(tight, sol.row_to_col);

  Permutation perm(std::move(sol.row_to_col));
  const double total = assignment_cost(cost, perm);
  return {std::move(perm), total};
}

Assignment brute_force_lsap(const CostMatrix &cost) {
  const std::size_t n = cost.size();
  if (n > kBruteForceLimit) {
    throw SizeError("brute-force assignment limited to K <= " +
                    std::to_string(kBruteForceLimit) + ", got " + std::to_string(n));
  }
  std::vector<int> m(n);
  std::iota(m.begin(), m.end(), 0);
  std::vector<int> best = m;
  double best_cost = kInf;
  do {
    double c = 0.0;
    for (std::size_t k = 0; k < n; ++k) c += cost(k, m[k]);
    if (c < best_cost) {
      best_cost = c;
      best = m;
    }
  } while (std::next_permutation(m.begin(), m.end()));
  if (n == 0) best_cost = 0.0;
  return {Permutation(std::move(best)), best_cost};
}

}  // namespace sortform
