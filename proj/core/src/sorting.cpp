#include "sortform/sorting.hpp"

#include <algorithm>
#include <numeric>

#include "sortform/errors.hpp"

namespace sortform {
namespace {

AtoCheck check_keys(const std::vector<ArrivalTime> &keys) {
  AtoCheck out;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (keys[i + 1] < keys[i]) {
      out.compliant = false;
      out.violations.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    }
  }
  return out;
}

}  // namespace

ArrivalTime arrival_time(std::span<const double> row) {
  for (std::size_t t = 0; t < row.size(); ++t) {
    if (row[t] != 0.0) return ArrivalTime::at(static_cast<int>(t));
  }
  return ArrivalTime::never();
}

std::vector<ArrivalTime> arrival_times(const Matrix &m, double threshold) {
  std::vector<ArrivalTime> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    for (Eigen::Index t = 0; t < m.cols(); ++t) {
      if (m(k, t) > threshold) {
        out[k] = ArrivalTime::at(static_cast<int>(t));
        break;
      }
    }
  }
  return out;
}

Permutation comparison_key_sort(std::span<const ArrivalTime> arrivals) {
  std::vector<int> idx(arrivals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return arrivals[a] < arrivals[b]; });
  return Permutation(std::move(idx));
}

Permutation counting_key_sort(std::span<const ArrivalTime> arrivals, int num_frames) {
  if (num_frames < 0) throw ValidationError("number of frames must be non-negative");
  const auto key = [&](const ArrivalTime &a) -> std::size_t {
    if (a.is_never()) return static_cast<std::size_t>(num_frames);
    if (a.frame() >= num_frames) {
      throw ValidationError("arrival time " + std::to_string(a.frame()) +
                            " is outside [0, " + std::to_string(num_frames) + ")");
    }
    return static_cast<std::size_t>(a.frame());
  };
  std::vector<std::size_t> count(static_cast<std::size_t>(num_frames) + 2, 0);
  for (const auto &a : arrivals) ++count[key(a) + 1];
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<int> out(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    out[count[key(arrivals[i])]++] = static_cast<int>(i);
  }
  return Permutation(std::move(out));
}

SortResult<PresenceMatrix> ats_sort(const PresenceMatrix &m) {
  const auto keys = arrival_times(m.values(), 0.0);
  Permutation eta = comparison_key_sort(keys);
  return {m.permuted(eta), std::move(eta)};
}

SortResult<PosteriorMatrix> ats_sort(const PosteriorMatrix &m, double binarize_threshold) {
  const auto keys = arrival_times(m.values(), binarize_threshold);
  Permutation eta = comparison_key_sort(keys);
  return {m.permuted(eta), std::move(eta)};
}

AtoCheck is_ato_sorted(const PosteriorMatrix &p, double threshold) {
  return check_keys(arrival_times(p.values(), threshold));
}

AtoCheck is_ato_sorted(const PresenceMatrix &y) {
  return check_keys(arrival_times(y.values(), 0.0));
}

SortResult<PosteriorMatrix> passive_sort(const PosteriorMatrix &p) { return ats_sort(p); }

}  // namespace sortform
