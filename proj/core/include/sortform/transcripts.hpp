#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sortform/timeline.hpp"

namespace sortform {

struct AttributedWord {
  std::string word;
  std::string speaker_id;
  double onset_s = 0.0;
  double duration_s = 0.0;
  bool approximate = false;

  double end_s() const noexcept { return onset_s + duration_s; }
  friend bool operator==(const AttributedWord &, const AttributedWord &) = default;
};

enum class SstLevel { kWord, kSegment };

std::string speaker_token(int index);

// True for "<|spkN|>"; stores N in *index when non-null.
bool is_speaker_token(std::string_view token, int *index = nullptr);

// Speaker-token-interleaved transcript.
struct TokenTranscript {
  std::vector<std::string> tokens;
  SstLevel level = SstLevel::kWord;

  std::string to_string() const;
  static TokenTranscript from_string(const std::string &text, SstLevel level = SstLevel::kWord);
};

// Vowel-group heuristic: maximal runs of [aeiouy] (case-insensitive), minus
// one for a terminal silent 'e' when more than one group, floored at 1.
// Tokens without letters count as 1. Throws ValidationError on "".
int count_syllables(std::string_view word);

// Splits [onset, onset + duration) among `words` in proportion to their
// syllable counts. Intervals are half-open and partition the segment.
std::vector<AttributedWord> approximate_word_timestamps(const std::string &speaker_id,
                                                        double onset_s, double duration_s,
                                                        const std::vector<std::string> &words);
std::vector<AttributedWord> approximate_word_timestamps(const Segment &segment);

// Words are stably sorted by onset and speakers renamed <|spk0|>, <|spk1|>,
// ... by their first word. Word level tags every word; segment level tags
// each maximal same-speaker run.
TokenTranscript build_sst(std::vector<AttributedWord> words, SstLevel level);

// (speaker index, word) pairs. Throws ParseError if a word precedes every
// speaker token or a new speaker index skips ahead of the next unused one.
std::vector<std::pair<int, std::string>> parse_sst(const TokenTranscript &transcript);

// Groups parse_sst output into per-speaker word lists indexed by speaker.
std::vector<std::vector<std::string>> words_by_speaker(
    const std::vector<std::pair<int, std::string>> &attributed);

// A slice of a session with its words; word times are session-absolute.
struct TranscriptSample {
  std::string session_id;
  double offset_s = 0.0;
  double duration_s = 0.0;
  std::vector<AttributedWord> words;
  std::string text;
};

enum class RejectReason { kNone, kEmpty, kDurationOutOfRange, kBoundaryOverlap, kFillerOpening };

std::string to_string(RejectReason reason);

struct CleanResult {
  bool accepted = false;
  RejectReason reason = RejectReason::kNone;
  TokenTranscript transcript;  // word-level SST when accepted
};

inline constexpr double kMinSliceSeconds = 10.0;
inline constexpr double kMaxSliceSeconds = 20.0;
inline constexpr double kMaxBoundaryOverlapSeconds = 1.0;

// {uh, um, huh, mm, yeah, oh}
const std::set<std::string> &filler_lexicon();

// Rejects slices outside [10, 20] s, slices whose overlapped speech next to
// the first or last word runs longer than 1 s (an overlap run counts as
// boundary overlap when it starts within 1 s of the first word onset or
// ends within 1 s of the last word end), and slices whose first speaker
// opens with only one or two filler words.
CleanResult clean_sample(const TranscriptSample &sample);

// Unit-cost Levenshtein distance over words.
std::size_t edit_distance(const std::vector<std::string> &ref, const std::vector<std::string> &hyp);

// (S + D + I) / |ref| after removing speaker tokens. Throws
// ValidationError on an empty reference.
double wer(const std::vector<std::string> &ref, const std::vector<std::string> &hyp);

inline constexpr std::size_t kCpwerExhaustiveLimit = 6;

// Minimum over speaker permutations of the summed per-speaker edit
// distance divided by the total reference word count. The smaller side is
// padded with empty speakers. Exhaustive for up to 6 speakers; larger
// problems use the assignment solver on the same pairwise costs.
double cpwer(const std::vector<std::vector<std::string>> &ref,
             const std::vector<std::vector<std::string>> &hyp);

// JSON-lines manifest record with keys session_id, offset, duration,
// words [{w, t, d, spk}], text.
std::string to_manifest_line(const TranscriptSample &sample);
TranscriptSample parse_manifest_line(const std::string &line);

}  // namespace sortform
