#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "sortform/timeline.hpp"
#include "sortform/transcripts.hpp"

namespace sortform {

struct SimConfig {
  int num_speakers = 2;
  double session_len_s = 90.0;
  double target_overlap_ratio = 0.12;
  double target_silence_ratio = 0.1;
  // Turn lengths are log-normal with this mean (seconds) and log-space sigma.
  double turn_mean_s = 3.0;
  double turn_log_sigma = 0.5;
  int feature_dim = 16;
  double signature_scale = 1.0;
  double noise_sigma = 0.1;
  double frame_len_s = kDefaultFrameLen;
  std::uint64_t seed = 0;

  // Throws ValidationError on out-of-range fields or infeasible targets.
  void validate() const;
};

struct SimSession {
  SessionAnnotation annotation;
  Matrix features;  // D x T frame embeddings
  std::vector<AttributedWord> words;
  PresenceMatrix truth;  // quantize(annotation)
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed of the i-th session derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Alternating-turn generator. The next speaker differs from the previous
// one; whether the next turn overlaps or follows a silence, and by how
// much, is steered by the running overlap and silence ratios so both track
// their targets. Features are per-session random unit speaker signatures
// summed over active speakers plus Gaussian noise.
SimSession simulate_session(const SimConfig &cfg);

// `count` sessions seeded by derive_seed(cfg.seed, i), generated on up to
// `threads` worker threads; results are in index order.
std::vector<SimSession> simulate_sessions(const SimConfig &cfg, std::size_t count,
                                          unsigned threads = 1);

struct SpeechRatios {
  double overlap_ratio = 0.0;  // time with >= 2 speakers / time with >= 1
  double silence_ratio = 0.0;  // time with 0 speakers / session length
};

SpeechRatios measure_ratios(const SessionAnnotation &ann, double session_len_s);

// Truth mapped to {eps, 1 - eps}, logit-jittered by Gaussian noise whose
// standard deviation is flip_noise * logit(1 - eps), then smoothed with a
// centred boxcar of `blur_frames` (no smoothing for 0 or 1).
PosteriorMatrix corrupt_posteriors(const PresenceMatrix &truth, double flip_noise,
                                   int blur_frames, std::uint64_t seed);

// The fixed 100-word lexicon used for synthetic transcripts.
const std::vector<std::string> &sim_lexicon();

// Writes <id>.rttm, <id>.features.sfm and <id>.truth.sfm into `dir` and
// appends one manifest record to <dir>/manifest.jsonl.
void write_session_files(const std::filesystem::path &dir, const SimSession &session);

}  // namespace sortform
