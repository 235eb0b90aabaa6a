#include "sortform/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "sortform/assignment.hpp"
#include "sortform/errors.hpp"

namespace sortform {
namespace {

using ActivityGrid = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ActivityGrid rasterize(const SessionAnnotation &ann, Eigen::Index frames) {
  ActivityGrid a = ActivityGrid::Zero(static_cast<Eigen::Index>(ann.num_speakers()), frames);
  for (const auto &seg : ann.segments()) {
    const int k = ann.speaker_index(seg.speaker_id);
    const auto first = std::max<Eigen::Index>(
        0, static_cast<Eigen::Index>(std::floor(seg.onset_s / kDerFrameSeconds - 0.5)) - 1);
    for (Eigen::Index t = first; t < frames; ++t) {
      const double mid = (static_cast<double>(t) + 0.5) * kDerFrameSeconds;
      if (mid >= seg.end_s()) break;
      if (mid >= seg.onset_s) a(k, t) = 1;
    }
  }
  return a;
}

std::vector<char> scored_mask(const SessionAnnotation &ref, Eigen::Index frames, double collar) {
  std::vector<char> scored(static_cast<std::size_t>(frames), 1);
  if (collar <= 0.0) return scored;
  const auto blank = [&](double boundary) {
    const auto lo = std::max<Eigen::Index>(
        0, static_cast<Eigen::Index>(std::floor((boundary - collar) / kDerFrameSeconds)) - 1);
    for (Eigen::Index t = lo; t < frames; ++t) {
      const double mid = (static_cast<double>(t) + 0.5) * kDerFrameSeconds;
      if (mid >= boundary + collar) break;
      if (mid > boundary - collar) scored[t] = 0;
    }
  };
  for (const auto &seg : ref.segments()) {
    blank(seg.onset_s);
    blank(seg.end_s());
  }
  return scored;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

DerBreakdown der(const SessionAnnotation &ref, const SessionAnnotation &hyp, double collar_s) {
  if (!(collar_s >= 0.0)) throw ValidationError("collar must be non-negative");
  const double span = std::max(ref.end_s(), hyp.end_s());
  const auto frames = static_cast<Eigen::Index>(std::ceil(span / kDerFrameSeconds - 1e-9));
  const ActivityGrid r = rasterize(ref, frames);
  const ActivityGrid h = rasterize(hyp, frames);
  const std::vector<char> scored = scored_mask(ref, frames, collar_s);

  const Eigen::Index kr = r.rows();
  const Eigen::Index kh = h.rows();
  const Eigen::Index n = std::max(kr, kh);
  // Maximise matched scored frames == minimise the negated overlap.
  Matrix cost = Matrix::Zero(n, n);
  for (Eigen::Index t = 0; t < frames; ++t) {
    if (!scored[t]) continue;
    for (Eigen::Index i = 0; i < kr; ++i) {
      if (!r(i, t)) continue;
      for (Eigen::Index j = 0; j < kh; ++j) {
        if (h(j, t)) cost(i, j) -= 1.0;
      }
    }
  }
  const Permutation mapping = solve_lsap(CostMatrix(cost)).perm;

  long long miss = 0, fa = 0, conf = 0, speech = 0;
  for (Eigen::Index t = 0; t < frames; ++t) {
    if (!scored[t]) continue;
    long long nref = 0, nhyp = 0, correct = 0;
    for (Eigen::Index i = 0; i < kr; ++i) {
      nref += r(i, t);
      const int j = mapping[i];
      if (r(i, t) && j < kh && h(j, t)) ++correct;
    }
    for (Eigen::Index j = 0; j < kh; ++j) nhyp += h(j, t);
    miss += std::max(0LL, nref - nhyp);
    fa += std::max(0LL, nhyp - nref);
    conf += std::min(nref, nhyp) - correct;
    speech += nref;
  }
  if (speech == 0) throw ValidationError("reference has no scored speech");

  DerBreakdown d;
  d.miss_s = static_cast<double>(miss) * kDerFrameSeconds;
  d.false_alarm_s = static_cast<double>(fa) * kDerFrameSeconds;
  d.confusion_s = static_cast<double>(conf) * kDerFrameSeconds;
  d.scored_speech_s = static_cast<double>(speech) * kDerFrameSeconds;
  d.der = static_cast<double>(miss + fa + conf) / static_cast<double>(speech);
  return d;
}

std::string to_json(const DerBreakdown &d) {
  nlohmann::ordered_json j;
  j["miss"] = d.miss_s;
  j["fa"] = d.false_alarm_s;
  j["conf"] = d.confusion_s;
  j["total"] = d.scored_speech_s;
  j["der"] = d.der;
  return j.dump();
}

std::string to_table(const DerBreakdown &d) {
  std::ostringstream os;
  os << "scored speech  " << fmt(d.scored_speech_s) << " s\n"
     << "missed speech  " << fmt(d.miss_s) << " s\n"
     << "false alarm    " << fmt(d.false_alarm_s) << " s\n"
     << "confusion      " << fmt(d.confusion_s) << " s\n"
     << "DER            " << fmt(100.0 * d.der) << " %\n";
  return os.str();
}

void PostProcessParams::validate() const {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(onset_threshold) || !unit(offset_threshold)) {
    throw ValidationError("post-processing thresholds must lie in [0, 1]");
  }
  if (!(onset_pad_s >= 0.0) || !(offset_pad_s >= 0.0) || !(min_duration_on_s >= 0.0) ||
      !(min_duration_off_s >= 0.0)) {
    throw ValidationError("post-processing durations must be non-negative");
  }
}

PostProcessParams parse_postprocess_params(const std::string &text) {
  PostProcessParams p;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string{};
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ParseError(lineno, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception &) {
      throw ParseError(lineno, "bad value for " + key);
    }
    if (key == "onset_threshold") p.onset_threshold = v;
    else if (key == "offset_threshold") p.offset_threshold = v;
    else if (key == "onset_pad_s") p.onset_pad_s = v;
    else if (key == "offset_pad_s") p.offset_pad_s = v;
    else if (key == "min_duration_on_s") p.min_duration_on_s = v;
    else if (key == "min_duration_off_s") p.min_duration_off_s = v;
    else throw ParseError(lineno, "unknown key '" + key + "'");
  }
  p.validate();
  return p;
}

std::string write_postprocess_params(const PostProcessParams &p) {
  std::ostringstream os;
  os.precision(17);
  os << "onset_threshold=" << p.onset_threshold << '\n'
     << "offset_threshold=" << p.offset_threshold << '\n'
     << "onset_pad_s=" << p.onset_pad_s << '\n'
     << "offset_pad_s=" << p.offset_pad_s << '\n'
     << "min_duration_on_s=" << p.min_duration_on_s << '\n'
     << "min_duration_off_s=" << p.min_duration_off_s << '\n';
  return os.str();
}

SessionAnnotation post_process(const PosteriorMatrix &p, const PostProcessParams &params,
                               const std::string &session_id) {
  params.validate();
  const Matrix &v = p.values();
  const double dt = p.grid().frame_len_s;
  const double session_end = dt * static_cast<double>(v.cols());
  std::vector<std::string> speakers;
  std::vector<Segment> segments;
  struct Span {
    double begin;
    double end;
  };
  for (Eigen::Index k = 0; k < v.rows(); ++k) {
    const std::string label = "spk" + std::to_string(k);
    speakers.push_back(label);

    std::vector<Span> spans;
    bool on = false;
    Eigen::Index start = 0;
    for (Eigen::Index t = 0; t < v.cols(); ++t) {
      if (!on && v(k, t) > params.onset_threshold) {
        on = true;
        start = t;
      } else if (on && !(v(k, t) > params.offset_threshold)) {
        on = false;
        spans.push_back({static_cast<double>(start) * dt, static_cast<double>(t) * dt});
      }
    }
    if (on) spans.push_back({static_cast<double>(start) * dt, session_end});

    for (auto &s : spans) {
      s.begin = std::max(0.0, s.begin - params.onset_pad_s);
      s.end = std::min(session_end, s.end + params.offset_pad_s);
    }
    std::vector<Span> merged;
    for (const auto &s : spans) {
      if (!merged.empty()) {
        const double gap = s.begin - merged.back().end;
        if (gap <= 0.0 || gap < params.min_duration_off_s) {
          merged.back().end = std::max(merged.back().end, s.end);
          continue;
        }
      }
      merged.push_back(s);
    }
    for (const auto &s : merged) {
      const double len = s.end - s.begin;
      if (len <= 0.0 || len < params.min_duration_on_s) continue;
      segments.push_back({label, s.begin, len, {}});
    }
  }
  return SessionAnnotation(session_id, std::move(segments), std::move(speakers));
}

}  // namespace sortform
