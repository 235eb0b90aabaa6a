#pragma once

#include <string>

#include "sortform/timeline.hpp"

namespace sortform {

// Scoring resolution for DER.
inline constexpr double kDerFrameSeconds = 0.01;

struct DerBreakdown {
  double miss_s = 0.0;
  double false_alarm_s = 0.0;
  double confusion_s = 0.0;
  double scored_speech_s = 0.0;
  double der = 0.0;
};

// NIST-style DER on a 10 ms grid. Frames whose centre lies within
// `collar_s` of any reference boundary are not scored. Overlapped speech is
// scored. Reference speakers map one-to-one onto hypothesis speakers so as
// to maximise matched scored time. Throws ValidationError when no reference
// speech is scored.
DerBreakdown der(const SessionAnnotation &ref, const SessionAnnotation &hyp, double collar_s);

// {"miss":..,"fa":..,"conf":..,"total":..,"der":..}
std::string to_json(const DerBreakdown &d);
std::string to_table(const DerBreakdown &d);

struct PostProcessParams {
  double onset_threshold = 0.5;
  double offset_threshold = 0.5;
  double onset_pad_s = 0.0;
  double offset_pad_s = 0.0;
  double min_duration_on_s = 0.0;
  double min_duration_off_s = 0.0;

  void validate() const;
};

// key=value lines (onset_threshold, offset_threshold, onset_pad_s,
// offset_pad_s, min_duration_on_s, min_duration_off_s); '#' comments.
PostProcessParams parse_postprocess_params(const std::string &text);
std::string write_postprocess_params(const PostProcessParams &params);

// Per speaker row: a segment opens when p rises above onset_threshold and
// closes once p is no longer above offset_threshold; segments are padded,
// clipped to the session, merged across gaps shorter than
// min_duration_off_s, and dropped if shorter than min_duration_on_s.
// Speakers are labelled spk0..spk{K-1} by row.
SessionAnnotation post_process(const PosteriorMatrix &p, const PostProcessParams &params,
                               const std::string &session_id = "session");

}  // namespace sortform
