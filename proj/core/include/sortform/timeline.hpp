#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sortform/permutation.hpp"

namespace sortform {

// Default frame length of the diarization model grid (80 ms).
inline constexpr double kDefaultFrameLen = 0.08;

struct Word {
  std::string text;
  double onset_s = 0.0;
  double duration_s = 0.0;

  friend bool operator==(const Word &, const Word &) = default;
};

struct Segment {
  std::string speaker_id;
  double onset_s = 0.0;
  double duration_s = 0.0;
  std::vector<Word> words;

  double end_s() const noexcept { return onset_s + duration_s; }

  // Throws ValidationError if duration <= 0, onset < 0, or words are
  // unordered or fall outside the segment (1e-6 s slack).
  void validate() const;

  friend bool operator==(const Segment &, const Segment &) = default;
};

// The RTTM view of a session. `speakers` lists every speaker in row order;
// it may contain speakers with no segments (silent rows).
class SessionAnnotation {
 public:
  SessionAnnotation() = default;

  // Sorts segments by (onset, speaker_id). Speakers that appear in segments
  // but not in `speakers` are appended in order of first appearance.
  SessionAnnotation(std::string session_id, std::vector<Segment> segments,
                    std::vector<std::string> speakers = {});

  const std::string &session_id() const noexcept { return session_id_; }
  const std::vector<Segment> &segments() const noexcept { return segments_; }
  const std::vector<std::string> &speakers() const noexcept { return speakers_; }
  std::size_t num_speakers() const noexcept { return speakers_.size(); }

  // Index of `speaker_id` in speakers(), or -1.
  int speaker_index(const std::string &speaker_id) const;

  // Latest segment end, 0 for an empty annotation.
  double end_s() const noexcept;

 private:
  std::string session_id_;
  std::vector<Segment> segments_;
  std::vector<std::string> speakers_;
};

struct FrameGrid {
  double frame_len_s = kDefaultFrameLen;
  int num_frames = 1;

  FrameGrid() = default;
  FrameGrid(double frame_len, int frames);

  double duration_s() const noexcept { return frame_len_s * num_frames; }

  // Smallest grid with the given frame length covering `seconds`.
  static FrameGrid covering(double seconds, double frame_len = kDefaultFrameLen);

  friend bool operator==(const FrameGrid &, const FrameGrid &) = default;
};

// K x T binary speaker presence matrix Y.
class PresenceMatrix {
 public:
  PresenceMatrix() = default;
  PresenceMatrix(Matrix values, FrameGrid grid, std::vector<std::string> speaker_order);

  // Labels speakers "spk0".."spk{K-1}".
  PresenceMatrix(Matrix values, FrameGrid grid);

  const Matrix &values() const noexcept { return values_; }
  const FrameGrid &grid() const noexcept { return grid_; }
  const std::vector<std::string> &speaker_order() const noexcept { return speaker_order_; }
  Eigen::Index num_speakers() const noexcept { return values_.rows(); }
  Eigen::Index num_frames() const noexcept { return values_.cols(); }

  PresenceMatrix permuted(const Permutation &perm) const;

  friend bool operator==(const PresenceMatrix &, const PresenceMatrix &) = default;

 private:
  Matrix values_;
  FrameGrid grid_;
  std::vector<std::string> speaker_order_;
};

// K x T posterior probabilities P, entries in [0, 1].
class PosteriorMatrix {
 public:
  PosteriorMatrix() = default;
  PosteriorMatrix(Matrix values, FrameGrid grid);

  // Frame length defaults to kDefaultFrameLen.
  explicit PosteriorMatrix(Matrix values);

  const Matrix &values() const noexcept { return values_; }
  const FrameGrid &grid() const noexcept { return grid_; }
  Eigen::Index num_speakers() const noexcept { return values_.rows(); }
  Eigen::Index num_frames() const noexcept { return values_.cols(); }

  PosteriorMatrix permuted(const Permutation &perm) const;

 private:
  Matrix values_;
  FrameGrid grid_;
};

SessionAnnotation parse_rttm(const std::string &text);
std::string write_rttm(const SessionAnnotation &ann);

// CTM: "<session> 1 <onset> <dur> <word>" per line, words in file order.
std::vector<Word> parse_ctm(const std::string &text, std::string *session_id = nullptr);
std::string write_ctm(const std::string &session_id, const std::vector<Word> &words);

// Midpoint rule: frame t is active for a speaker iff (t + 0.5) * frame_len
// lies in one of its segments' [onset, end). Content past the grid is
// truncated with a warning on stderr.
PresenceMatrix quantize(const SessionAnnotation &ann, const FrameGrid &grid);

// Maximal runs of ones become segments. Speakers keep their row order.
SessionAnnotation dequantize(const PresenceMatrix &pm,
                             const std::string &session_id = "session");

}  // namespace sortform
