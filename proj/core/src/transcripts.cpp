#include "sortform/transcripts.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sortform/assignment.hpp"
#include "sortform/errors.hpp"

namespace sortform {
namespace {

bool is_vowel(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

std::string normalize_word(std::string_view w) {
  std::string out;
  for (char c : w) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::vector<std::string> strip_speaker_tokens(const std::vector<std::string> &tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) {
    if (!is_speaker_token(t)) out.push_back(t);
  }
  return out;
}

struct Interval {
  double begin;
  double end;
};

// Maximal intervals where at least two speakers have an active word.
std::vector<Interval> overlap_runs(const std::vector<AttributedWord> &words) {
  std::map<std::string, std::vector<Interval>> by_speaker;
  for (const auto &w : words) {
    if (w.duration_s > 0.0) by_speaker[w.speaker_id].push_back({w.onset_s, w.end_s()});
  }
  // Per-speaker union first so a speaker never overlaps with itself.
  std::vector<std::pair<double, int>> events;
  for (auto &[spk, iv] : by_speaker) {
    std::sort(iv.begin(), iv.end(), [](const Interval &a, const Interval &b) { return a.begin < b.begin; });
    std::vector<Interval> merged;
    for (const auto &i : iv) {
      if (!merged.empty() && i.begin <= merged.back().end) {
        merged.back().end = std::max(merged.back().end, i.end);
      } else {
        merged.push_back(i);
      }
    }
    for (const auto &m : merged) {
      events.emplace_back(m.begin, +1);
      events.emplace_back(m.end, -1);
    }
  }
  // Ends before starts at equal times: touching intervals do not overlap.
  std::sort(events.begin(), events.end());
  std::vector<Interval> runs;
  int active = 0;
  double run_start = 0.0;
  for (const auto &[time, delta] : events) {
    const int before = active;
    active += delta;
    if (before < 2 && active >= 2) run_start = time;
    if (before >= 2 && active < 2 && time > run_start) runs.push_back({run_start, time});
  }
  return runs;
}

}  // namespace

std::string speaker_token(int index) { return "<|spk" + std::to_string(index) + "|>"; }

bool is_speaker_token(std::string_view token, int *index) {
  constexpr std::string_view prefix = "<|spk";
  constexpr std::string_view suffix = "|>";
  if (token.size() <= prefix.size() + suffix.size() || !token.starts_with(prefix) ||
      !token.ends_with(suffix)) {
    return false;
  }
  const auto digits = token.substr(prefix.size(), token.size() - prefix.size() - suffix.size());
  int value = 0;
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || value < 0) return false;
  if (index != nullptr) *index = value;
  return true;
}

std::string TokenTranscript::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

TokenTranscript TokenTranscript::from_string(const std::string &text, SstLevel level) {
  TokenTranscript t;
  t.level = level;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) t.tokens.push_back(tok);
  return t;
}

int count_syllables(std::string_view word) {
  if (word.empty()) throw ValidationError("cannot count syllables of an empty word");
  const std::string letters = normalize_word(word);
  if (letters.empty()) return 1;
  int groups = 0;
  bool in_group = false;
  for (char c : letters) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  if (letters.back() == 'e' && groups > 1) --groups;
  return std::max(groups, 1);
}

std::vector<AttributedWord> approximate_word_timestamps(const std::string &speaker_id,
                                                        double onset_s, double duration_s,
                                                        const std::vector<std::string> &words) {
  if (words.empty()) throw ValidationError("segment has no words to time");
  if (!(duration_s > 0.0)) throw ValidationError("segment duration must be positive");
  std::vector<int> syllables;
  syllables.reserve(words.size());
  for (const auto &w : words) syllables.push_back(count_syllables(w));
  const int total = std::accumulate(syllables.begin(), syllables.end(), 0);
  const double rate = duration_s / static_cast<double>(total);  // seconds per syllable
  const double end = onset_s + duration_s;

  std::vector<AttributedWord> out(words.size());
  int cumulative = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    out[i].word = words[i];
    out[i].speaker_id = speaker_id;
    out[i].onset_s = onset_s + rate * cumulative;
    out[i].approximate = true;
    cumulative += syllables[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double next = i + 1 < out.size() ? out[i + 1].onset_s : end;
    out[i].duration_s = next - out[i].onset_s;
  }
  return out;
}

std::vector<AttributedWord> approximate_word_timestamps(const Segment &segment) {
  std::vector<std::string> texts;
  texts.reserve(segment.words.size());
  for (const auto &w : segment.words) texts.push_back(w.text);
  return approximate_word_timestamps(segment.speaker_id, segment.onset_s, segment.duration_s, texts);
}

TokenTranscript build_sst(std::vector<AttributedWord> words, SstLevel level) {
  for (const auto &w : words) {
    if (!std::isfinite(w.onset_s)) {
      throw ValidationError("word '" + w.word + "' has no onset");
    }
  }
  std::stable_sort(words.begin(), words.end(),
                   [](const AttributedWord &a, const AttributedWord &b) { return a.onset_s < b.onset_s; });
  std::map<std::string, int> renamed;
  TokenTranscript out;
  out.level = level;
  int previous = -1;
  for (const auto &w : words) {
    const auto [it, inserted] = renamed.try_emplace(w.speaker_id, static_cast<int>(renamed.size()));
    const int idx = it->second;
    if (level == SstLevel::kWord || idx != previous) out.tokens.push_back(speaker_token(idx));
    out.tokens.push_back(w.word);
    previous = idx;
  }
  return out;
}

std::vector<std::pair<int, std::string>> parse_sst(const TokenTranscript &transcript) {
  std::vector<std::pair<int, std::string>> out;
  int current = -1;
  int next_new = 0;
  for (std::size_t i = 0; i < transcript.tokens.size(); ++i) {
    const auto &tok = transcript.tokens[i];
    int idx = 0;
    if (is_speaker_token(tok, &idx)) {
      if (idx > next_new) {
        throw ParseError(0, "token " + std::to_string(i) + ": " + tok + " appears before " +
                                speaker_token(next_new));
      }
      if (idx == next_new) ++next_new;
      current = idx;
      continue;
    }
    if (current < 0) {
      throw ParseError(0, "token " + std::to_string(i) + ": word '" + tok +
                              "' precedes every speaker token");
    }
    out.emplace_back(current, tok);
  }
  return out;
}

std::vector<std::vector<std::string>> words_by_speaker(
    const std::vector<std::pair<int, std::string>> &attributed) {
  std::vector<std::vector<std::string>> out;
  for (const auto &[spk, word] : attributed) {
    if (static_cast<std::size_t>(spk) >= out.size()) out.resize(spk + 1);
    out[spk].push_back(word);
  }
  return out;
}

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kNone: return "none";
    case RejectReason::kEmpty: return "empty";
    case RejectReason::kDurationOutOfRange: return "duration_out_of_range";
    case RejectReason::kBoundaryOverlap: return "boundary_overlap";
    case RejectReason::kFillerOpening: return "filler_opening";
  }
  return "unknown";
}

const std::set<std::string> &filler_lexicon() {
  static const std::set<std::string> lexicon{"uh", "um", "huh", "mm", "yeah", "oh"};
  return lexicon;
}

CleanResult clean_sample(const TranscriptSample &sample) {
  CleanResult r;
  const auto reject = [&](RejectReason why) {
    r.accepted = false;
    r.reason = why;
    return r;
  };
  if (sample.duration_s < kMinSliceSeconds || sample.duration_s > kMaxSliceSeconds) {
    return reject(RejectReason::kDurationOutOfRange);
  }
  if (sample.words.empty()) return reject(RejectReason::kEmpty);

  std::vector<AttributedWord> words = sample.words;
  std::stable_sort(words.begin(), words.end(),
                   [](const AttributedWord &a, const AttributedWord &b) { return a.onset_s < b.onset_s; });

  const double first_onset = words.front().onset_s;
  double last_end = first_onset;
  for (const auto &w : words) last_end = std::max(last_end, w.end_s());
  for (const auto &run : overlap_runs(words)) {
    const bool at_start = run.begin <= first_onset + kMaxBoundaryOverlapSeconds;
    const bool at_end = run.end >= last_end - kMaxBoundaryOverlapSeconds;
    if ((at_start || at_end) && run.end - run.begin > kMaxBoundaryOverlapSeconds) {
      return reject(RejectReason::kBoundaryOverlap);
    }
  }

  const std::string &opener = words.front().speaker_id;
  std::size_t opening_run = 0;
  bool all_fillers = true;
  while (opening_run < words.size() && words[opening_run].speaker_id == opener) {
    all_fillers = all_fillers && filler_lexicon().contains(normalize_word(words[opening_run].word));
    ++opening_run;
  }
  if (opening_run <= 2 && all_fillers) {
    return reject(RejectReason::kFillerOpening);
  }

  r.accepted = true;
  r.transcript = build_sst(std::move(words), SstLevel::kWord);
  return r;
}

std::size_t edit_distance(const std::vector<std::string> &ref, const std::vector<std::string> &hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

double wer(const std::vector<std::string> &ref, const std::vector<std::string> &hyp) {
  const auto r = strip_speaker_tokens(ref);
  const auto h = strip_speaker_tokens(hyp);
  if (r.empty()) throw ValidationError("WER needs a non-empty reference");
  return static_cast<double>(edit_distance(r, h)) / static_cast<double>(r.size());
}

double cpwer(const std::vector<std::vector<std::string>> &ref,
             const std::vector<std::vector<std::string>> &hyp) {
  const std::size_t k = std::max(ref.size(), hyp.size());
  std::vector<std::vector<std::string>> r(k), h(k);
  std::size_t ref_words = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    r[i] = strip_speaker_tokens(ref[i]);
    ref_words += r[i].size();
  }
  for (std::size_t i = 0; i < hyp.size(); ++i) h[i] = strip_speaker_tokens(hyp[i]);
  if (ref_words == 0) throw ValidationError("cpWER needs a non-empty reference");

  Matrix cost(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) cost(i, j) = static_cast<double>(edit_distance(r[i], h[j]));
  }
  double best = 0.0;
  if (k <= kCpwerExhaustiveLimit) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) total += cost(i, perm[i]);
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = solve_lsap(CostMatrix(cost)).total_cost;
  }
  return best / static_cast<double>(ref_words);
}

std::string to_manifest_line(const TranscriptSample &sample) {
  nlohmann::ordered_json j;
  j["session_id"] = sample.session_id;
  j["offset"] = sample.offset_s;
  j["duration"] = sample.duration_s;
  auto words = nlohmann::ordered_json::array();
  for (const auto &w : sample.words) {
    nlohmann::ordered_json o;
    o["w"] = w.word;
    o["t"] = w.onset_s;
    o["d"] = w.duration_s;
    o["spk"] = w.speaker_id;
    words.push_back(std::move(o));
  }
  j["words"] = std::move(words);
  j["text"] = sample.text;
  return j.dump();
}

TranscriptSample parse_manifest_line(const std::string &line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    TranscriptSample s;
    s.session_id = j.at("session_id").get<std::string>();
    s.offset_s = j.at("offset").get<double>();
    s.duration_s = j.at("duration").get<double>();
    for (const auto &w : j.at("words")) {
      AttributedWord a;
      a.word = w.at("w").get<std::string>();
      a.speaker_id = w.at("spk").get<std::string>();
      if (w.contains("t") && !w.at("t").is_null()) {
        a.onset_s = w.at("t").get<double>();
      } else {
        a.onset_s = std::numeric_limits<double>::quiet_NaN();
      }
      a.duration_s = w.contains("d") && !w.at("d").is_null() ? w.at("d").get<double>() : 0.0;
      s.words.push_back(std::move(a));
    }
    s.text = j.value("text", std::string{});
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(0, std::string("manifest: ") + e.what());
  }
}

}  // namespace sortform
