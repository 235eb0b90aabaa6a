#pragma once

#include <compare>
#include <span>
#include <utility>
#include <vector>

#include "sortform/timeline.hpp"

namespace sortform {

// First active frame of a speaker row, or never() for a silent row.
// never() orders after every frame index.
class ArrivalTime {
 public:
  constexpr ArrivalTime() = default;
  static constexpr ArrivalTime at(int frame) { return ArrivalTime(frame); }
  static constexpr ArrivalTime never() { return ArrivalTime(); }

  constexpr bool is_never() const noexcept { return frame_ < 0; }
  // Frame index; undefined for never().
  constexpr int frame() const noexcept { return frame_; }

  constexpr std::strong_ordering operator<=>(const ArrivalTime &o) const noexcept {
    if (is_never() || o.is_never()) return is_never() <=> o.is_never();
    return frame_ <=> o.frame_;
  }
  constexpr bool operator==(const ArrivalTime &) const noexcept = default;

 private:
  constexpr explicit ArrivalTime(int frame) : frame_(frame) {}
  int frame_ = -1;
};

ArrivalTime arrival_time(std::span<const double> row);

// Arrival time of each row of a matrix, treating entries > threshold as
// active. For 0/1 matrices any threshold in [0, 1) gives the exact rows.
std::vector<ArrivalTime> arrival_times(const Matrix &m, double threshold = 0.5);

template <typename M>
struct SortResult {
  M sorted_matrix;
  Permutation eta;
};

// Stable sort of rows by arrival time (silent rows last); sorted row i is
// input row eta[i]. Posteriors are binarized only to compute the sort key.
SortResult<PresenceMatrix> ats_sort(const PresenceMatrix &m);
SortResult<PosteriorMatrix> ats_sort(const PosteriorMatrix &m, double binarize_threshold = 0.5);

// Stable comparison sort of arrival keys.
Permutation comparison_key_sort(std::span<const ArrivalTime> arrivals);

// Linear-time counting sort on keys in [0, T] with never() mapped to T.
// Throws ValidationError if a key is >= T.
Permutation counting_key_sort(std::span<const ArrivalTime> arrivals, int num_frames);

struct AtoCheck {
  bool compliant = true;
  std::vector<std::pair<int, int>> violations;  // adjacent (i, i+1) inversions
};

AtoCheck is_ato_sorted(const PosteriorMatrix &p, double threshold = 0.5);
AtoCheck is_ato_sorted(const PresenceMatrix &y);

// Algorithmic sorting applied on top of a model's output.
SortResult<PosteriorMatrix> passive_sort(const PosteriorMatrix &p);

}  // namespace sortform
