#include "sortform/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "sortform/errors.hpp"

namespace sortform {
namespace {

constexpr double kWordSlack = 1e-6;

std::vector<std::string> split_ws(const std::string &line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_seconds(const std::string &tok, std::size_t lineno, const char *what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != tok.size() || !std::isfinite(v)) {
    throw ParseError(lineno, std::string("bad ") + what + " '" + tok + "'");
  }
  return v;
}

bool is_comment(const std::vector<std::string> &fields) {
  return !fields.empty() && fields[0].rfind(";;", 0) == 0;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

void Segment::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw ValidationError("segment of speaker '" + speaker_id +
                          "' has non-positive duration " + std::to_string(duration_s));
  }
  if (!(onset_s >= 0.0) || !std::isfinite(onset_s)) {
    throw ValidationError("segment of speaker '" + speaker_id +
                          "' has negative onset " + std::to_string(onset_s));
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto &w : words) {
    if (w.onset_s < onset_s - kWordSlack ||
        w.onset_s + w.duration_s > end_s() + kWordSlack || w.duration_s < 0.0) {
      throw ValidationError("word '" + w.text + "' lies outside its segment");
    }
    if (w.onset_s < prev) {
      throw ValidationError("words of a segment must be ordered by onset");
    }
    prev = w.onset_s;
  }
}

SessionAnnotation::SessionAnnotation(std::string session_id, std::vector<Segment> segments,
                                     std::vector<std::string> speakers)
    : session_id_(std::move(session_id)),
      segments_(std::move(segments)),
      speakers_(std::move(speakers)) {
  std::unordered_set<std::string> known;
  for (const auto &s : speakers_) {
    if (!known.insert(s).second) {
      throw ValidationError("duplicate speaker '" + s + "'");
    }
  }
  for (const auto &seg : segments_) seg.validate();
  std::stable_sort(segments_.begin(), segments_.end(), [](const Segment &a, const Segment &b) {
    if (a.onset_s != b.onset_s) return a.onset_s < b.onset_s;
    return a.speaker_id < b.speaker_id;
  });
  for (const auto &seg : segments_) {
    if (known.insert(seg.speaker_id).second) speakers_.push_back(seg.speaker_id);
  }
}

int SessionAnnotation::speaker_index(const std::string &speaker_id) const {
  const auto it = std::find(speakers_.begin(), speakers_.end(), speaker_id);
  return it == speakers_.end() ? -1 : static_cast<int>(it - speakers_.begin());
}

double SessionAnnotation::end_s() const noexcept {
  double end = 0.0;
  for (const auto &s : segments_) end = std::max(end, s.end_s());
  return end;
}

FrameGrid::FrameGrid(double frame_len, int frames) : frame_len_s(frame_len), num_frames(frames) {
  if (!(frame_len > 0.0) || !std::isfinite(frame_len)) {
    throw ValidationError("frame length must be positive");
  }
  if (frames < 1) throw ValidationError("frame grid needs at least one frame");
}

FrameGrid FrameGrid::covering(double seconds, double frame_len) {
  const int frames = std::max(1, static_cast<int>(std::ceil(seconds / frame_len - 1e-9)));
  return FrameGrid(frame_len, frames);
}

PresenceMatrix::PresenceMatrix(Matrix values, FrameGrid grid, std::vector<std::string> speaker_order)
    : values_(std::move(values)), grid_(grid), speaker_order_(std::move(speaker_order)) {
  if (static_cast<std::size_t>(values_.rows()) != speaker_order_.size()) {
    throw ValidationError("presence matrix has " + std::to_string(values_.rows()) +
                          " rows but " + std::to_string(speaker_order_.size()) + " speaker labels");
  }
  if (values_.cols() != grid_.num_frames) {
    throw ValidationError("presence matrix width does not match its frame grid");
  }
  if (!values_.unaryExpr([](double v) { return v == 0.0 || v == 1.0; }).all()) {
    throw ValidationError("presence matrix entries must be 0 or 1");
  }
}

PresenceMatrix::PresenceMatrix(Matrix values, FrameGrid grid)
    : PresenceMatrix(values, grid, [&] {
        std::vector<std::string> labels;
        for (Eigen::Index k = 0; k < values.rows(); ++k) labels.push_back("spk" + std::to_string(k));
        return labels;
      }()) {}

PresenceMatrix PresenceMatrix::permuted(const Permutation &perm) const {
  std::vector<std::string> order(speaker_order_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = speaker_order_[perm[i]];
  return PresenceMatrix(perm.apply_rows(values_), grid_, std::move(order));
}

PosteriorMatrix::PosteriorMatrix(Matrix values, FrameGrid grid)
    : values_(std::move(values)), grid_(grid) {
  if (values_.cols() != grid_.num_frames) {
    throw ValidationError("posterior matrix width does not match its frame grid");
  }
  if (!values_.allFinite()) throw ValidationError("posterior matrix has non-finite entries");
  if ((values_.array() < 0.0).any() || (values_.array() > 1.0).any()) {
    throw ValidationError("posterior matrix entries must lie in [0, 1]");
  }
}

PosteriorMatrix::PosteriorMatrix(Matrix values)
    : PosteriorMatrix(values, FrameGrid(kDefaultFrameLen, static_cast<int>(values.cols()))) {}

PosteriorMatrix PosteriorMatrix::permuted(const Permutation &perm) const {
  return PosteriorMatrix(perm.apply_rows(values_), grid_);
}

SessionAnnotation parse_rttm(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::string session_id;
  std::vector<Segment> segments;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split_ws(line);
    if (f.empty() || is_comment(f)) continue;
    if (f.size() < 9) {
      throw ParseError(lineno, "RTTM line has " + std::to_string(f.size()) +
                                   " fields, expected at least 9");
    }
    if (f[0] != "SPEAKER") {
      throw ParseError(lineno, "RTTM record type '" + f[0] + "' is not SPEAKER");
    }
    if (session_id.empty()) {
      session_id = f[1];
    } else if (f[1] != session_id) {
      throw ParseError(lineno, "RTTM mixes sessions '" + session_id + "' and '" + f[1] + "'");
    }
    Segment seg;
    seg.onset_s = parse_seconds(f[3], lineno, "onset");
    seg.duration_s = parse_seconds(f[4], lineno, "duration");
    seg.speaker_id = f[7];
    if (seg.duration_s < 0.0) {
      throw ValidationError("line " + std::to_string(lineno) + ": negative duration");
    }
    try {
      seg.validate();
    } catch (const ValidationError &e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
    segments.push_back(std::move(seg));
  }
  return SessionAnnotation(session_id, std::move(segments));
}

std::string write_rttm(const SessionAnnotation &ann) {
  std::string out;
  for (const auto &s : ann.segments()) {
    out += "SPEAKER " + ann.session_id() + " 1 " + format_fixed(s.onset_s, 3) + " " +
           format_fixed(s.duration_s, 3) + " <NA> <NA> " + s.speaker_id + " <NA> <NA>\n";
  }
  return out;
}

std::vector<Word> parse_ctm(const std::string &text, std::string *session_id) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<Word> words;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split_ws(line);
    if (f.empty() || is_comment(f)) continue;
    if (f.size() < 5) {
      throw ParseError(lineno, "CTM line has " + std::to_string(f.size()) +
                                   " fields, expected at least 5");
    }
    if (session_id != nullptr && session_id->empty()) *session_id = f[0];
    Word w;
    w.onset_s = parse_seconds(f[2], lineno, "onset");
    w.duration_s = parse_seconds(f[3], lineno, "duration");
    w.text = f[4];
    if (w.duration_s < 0.0 || w.onset_s < 0.0) {
      throw ValidationError("line " + std::to_string(lineno) + ": negative time");
    }
    words.push_back(std::move(w));
  }
  return words;
}

std::string write_ctm(const std::string &session_id, const std::vector<Word> &words) {
  std::string out;
  for (const auto &w : words) {
    out += session_id + " 1 " + format_fixed(w.onset_s, 2) + " " +
           format_fixed(w.duration_s, 2) + " " + w.text + "\n";
  }
  return out;
}

PresenceMatrix quantize(const SessionAnnotation &ann, const FrameGrid &grid) {
  if (ann.num_speakers() == 0) {
    throw ValidationError("cannot quantize an annotation with no speakers");
  }
  if (ann.end_s() > grid.duration_s() + 1e-9) {
    std::cerr << "warning: session '" << ann.session_id() << "' ends at " << ann.end_s()
              << " s, truncated to " << grid.duration_s() << " s\n";
  }
  const double dt = grid.frame_len_s;
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(ann.num_speakers()), grid.num_frames);
  for (const auto &seg : ann.segments()) {
    const int k = ann.speaker_index(seg.speaker_id);
    const int first = std::max(0, static_cast<int>(std::floor(seg.onset_s / dt - 0.5)) - 1);
    for (int t = first; t < grid.num_frames; ++t) {
      const double mid = (t + 0.5) * dt;
      if (mid >= seg.end_s()) break;
      if (mid >= seg.onset_s) y(k, t) = 1.0;
    }
  }
  return PresenceMatrix(std::move(y), grid, ann.speakers());
}

SessionAnnotation dequantize(const PresenceMatrix &pm, const std::string &session_id) {
  const double dt = pm.grid().frame_len_s;
  const Matrix &y = pm.values();
  std::vector<Segment> segments;
  for (Eigen::Index k = 0; k < y.rows(); ++k) {
    Eigen::Index t = 0;
    while (t < y.cols()) {
      if (y(k, t) == 0.0) {
        ++t;
        continue;
      }
      const Eigen::Index start = t;
      while (t < y.cols() && y(k, t) != 0.0) ++t;
      Segment seg;
      seg.speaker_id = pm.speaker_order()[k];
      seg.onset_s = static_cast<double>(start) * dt;
      seg.duration_s = static_cast<double>(t - start) * dt;
      segments.push_back(std::move(seg));
    }
  }
  return SessionAnnotation(session_id, std::move(segments), pm.speaker_order());
}

}  // namespace sortform
