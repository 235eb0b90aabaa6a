#include "sortform/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

#include "sortform/errors.hpp"
#include "sortform/matrix_io.hpp"
#include "sortform/objectives.hpp"

namespace sortform {
namespace {

constexpr double kSecondsPerSyllable = 0.22;

struct Turn {
  int speaker;
  double begin;
  double end;
};

struct TimelineStats {
  double speech = 0.0;   // >= 1 active
  double overlap = 0.0;  // >= 2 active
  double silence = 0.0;  // 0 active
};

TimelineStats sweep(std::vector<std::pair<double, int>> events, double horizon) {
  std::sort(events.begin(), events.end());
  TimelineStats s;
  int active = 0;
  double last = 0.0;
  for (const auto &[time, delta] : events) {
    const double t = std::clamp(time, 0.0, horizon);
    const double span = t - last;
    if (span > 0.0) {
      if (active == 0) s.silence += span;
      if (active >= 1) s.speech += span;
      if (active >= 2) s.overlap += span;
    }
    last = std::max(last, t);
    active += delta;
  }
  if (horizon > last) s.silence += horizon - last;
  return s;
}

// Events of per-speaker unions so a speaker never overlaps itself.
std::vector<std::pair<double, int>> speaker_events(
    std::vector<std::vector<std::pair<double, double>>> per_speaker) {
  std::vector<std::pair<double, int>> events;
  for (auto &iv : per_speaker) {
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto &i : iv) {
      if (!merged.empty() && i.first <= merged.back().second) {
        merged.back().second = std::max(merged.back().second, i.second);
      } else {
        merged.push_back(i);
      }
    }
    for (const auto &m : merged) {
      events.emplace_back(m.first, +1);
      events.emplace_back(m.second, -1);
    }
  }
  return events;
}

TimelineStats turn_stats(const std::vector<Turn> &turns, int num_speakers, double horizon) {
  std::vector<std::vector<std::pair<double, double>>> per(num_speakers);
  for (const auto &t : turns) per[t.speaker].emplace_back(t.begin, t.end);
  return sweep(speaker_events(std::move(per)), horizon);
}

std::vector<std::string> words_for(double duration, std::mt19937_64 &rng) {
  const auto &lex = sim_lexicon();
  std::uniform_int_distribution<std::size_t> pick(0, lex.size() - 1);
  const int budget = std::max(1, static_cast<int>(std::lround(duration / kSecondsPerSyllable)));
  std::vector<std::string> out;
  int syllables = 0;
  while (syllables < budget) {
    out.push_back(lex[pick(rng)]);
    syllables += count_syllables(out.back());
  }
  return out;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x5851F42D4C957F2DULL));
}

void SimConfig::validate() const {
  if (num_speakers < 1 || num_speakers > 4) throw ValidationError("num_speakers must be in [1, 4]");
  if (!(session_len_s > 0.0)) throw ValidationError("session length must be positive");
  const auto ratio_ok = [](double r) { return r >= 0.0 && r < 1.0; };
  if (!ratio_ok(target_overlap_ratio) || !ratio_ok(target_silence_ratio)) {
    throw ValidationError("overlap and silence targets must lie in [0, 1)");
  }
  if (target_overlap_ratio + target_silence_ratio >= 1.0) {
    throw ValidationError("overlap and silence targets must sum to less than 1");
  }
  if (num_speakers == 1 && target_overlap_ratio > 0.0) {
    throw ValidationError("a single speaker cannot produce overlap");
  }
  if (!(turn_mean_s > 0.0) || !(turn_log_sigma >= 0.0)) {
    throw ValidationError("turn length distribution must have positive mean");
  }
  if (feature_dim < 1) throw ValidationError("feature_dim must be positive");
  if (!(signature_scale >= 0.0) || !(noise_sigma >= 0.0)) {
    throw ValidationError("signature scale and noise must be non-negative");
  }
  if (!(frame_len_s > 0.0)) throw ValidationError("frame length must be positive");
}

SimSession simulate_session(const SimConfig &cfg) {
  cfg.validate();
  std::mt19937_64 rng(splitmix64(cfg.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double mu = std::log(cfg.turn_mean_s) - 0.5 * cfg.turn_log_sigma * cfg.turn_log_sigma;
  std::lognormal_distribution<double> turn_len(mu, cfg.turn_log_sigma);
  const int k = cfg.num_speakers;
  const double horizon = cfg.session_len_s;

  std::vector<Turn> turns;
  double frontier = 0.0;    // latest end so far
  double solo_begin = 0.0;  // where the last turn stopped overlapping its predecessor
  int previous = -1;
  while (true) {
    const double len = turn_len(rng);
    int speaker = 0;
    if (k > 1) {
      std::uniform_int_distribution<int> other(0, previous < 0 ? k - 1 : k - 2);
      speaker = other(rng);
      if (previous >= 0 && speaker >= previous) ++speaker;
    }
    const TimelineStats s = turn_stats(turns, k, frontier);
    const double jitter = 0.5 + unit(rng);
    double begin = frontier;
    const bool want_overlap = !turns.empty() && k > 1 && cfg.target_overlap_ratio > 0.0 &&
                              s.overlap < cfg.target_overlap_ratio * s.speech;
    if (want_overlap) {
      // Solve (ov + o) / (speech + len - o) = target for o.
      const double r = cfg.target_overlap_ratio;
      double o = (r * (s.speech + len) - s.overlap) / (1.0 + r) * jitter;
      o = std::clamp(o, 0.0, 0.9 * std::min(len, frontier - solo_begin));
      begin = frontier - o;
    } else {
      // Solve (sil + g) / (frontier + g + len) = target for g.
      const double r = cfg.target_silence_ratio;
      const double g = (r * (frontier + len) - s.silence) / (1.0 - r) * jitter;
      begin = frontier + std::max(0.0, g);
    }
    if (begin >= horizon) break;
    const double end = std::min(begin + len, horizon);
    turns.push_back({speaker, begin, end});
    solo_begin = std::max(begin, std::min(frontier, end));
    frontier = std::max(frontier, end);
    previous = speaker;
    if (end >= horizon) break;
  }

  std::vector<Segment> segments;
  std::vector<AttributedWord> words;
  for (const auto &t : turns) {
    if (t.end - t.begin <= 0.0) continue;
    Segment seg{"spk" + std::to_string(t.speaker), t.begin, t.end - t.begin, {}};
    auto timed = approximate_word_timestamps(seg.speaker_id, seg.onset_s, seg.duration_s,
                                             words_for(seg.duration_s, rng));
    for (auto &w : timed) {
      w.approximate = false;
      seg.words.push_back({w.word, w.onset_s, w.duration_s});
      words.push_back(std::move(w));
    }
    segments.push_back(std::move(seg));
  }
  // Rows follow label order, so arrival order is random across sessions.
  std::vector<std::string> labels;
  for (int s = 0; s < k; ++s) labels.push_back("spk" + std::to_string(s));
  SessionAnnotation ann("sim" + std::to_string(cfg.seed), std::move(segments), std::move(labels));

  const FrameGrid grid = FrameGrid::covering(horizon, cfg.frame_len_s);
  PresenceMatrix truth = quantize(ann, grid);

  // Signatures are drawn for every configured speaker so the feature RNG
  // stream does not depend on which speakers happened to talk.
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix signatures(cfg.feature_dim, k);
  for (int s = 0; s < k; ++s) {
    for (int d = 0; d < cfg.feature_dim; ++d) signatures(d, s) = gauss(rng);
    signatures.col(s) *= cfg.signature_scale / signatures.col(s).norm();
  }
  Matrix features(cfg.feature_dim, grid.num_frames);
  for (int t = 0; t < grid.num_frames; ++t) {
    for (int d = 0; d < cfg.feature_dim; ++d) features(d, t) = cfg.noise_sigma * gauss(rng);
  }
  for (Eigen::Index row = 0; row < truth.num_speakers(); ++row) {
    const int spk = std::stoi(truth.speaker_order()[row].substr(3));
    for (int t = 0; t < grid.num_frames; ++t) {
      if (truth.values()(row, t) != 0.0) features.col(t) += signatures.col(spk);
    }
  }
  return {std::move(ann), std::move(features), std::move(words), std::move(truth)};
}

std::vector<SimSession> simulate_sessions(const SimConfig &cfg, std::size_t count, unsigned threads) {
  std::vector<SimSession> out(count);
  const auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) {
      SimConfig c = cfg;
      c.seed = derive_seed(cfg.seed, i);
      SimSession s = simulate_session(c);
      char id[32];
      std::snprintf(id, sizeof id, "session_%04zu", i);
      s.annotation = SessionAnnotation(id, s.annotation.segments(), s.annotation.speakers());
      out[i] = std::move(s);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (n <= 1) {
    work(0, 1);
    return out;
  }
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(work, w, n);
  }
  return out;
}

SpeechRatios measure_ratios(const SessionAnnotation &ann, double session_len_s) {
  if (!(session_len_s > 0.0)) throw ValidationError("session length must be positive");
  std::vector<std::vector<std::pair<double, double>>> per(ann.num_speakers());
  for (const auto &seg : ann.segments()) {
    per[ann.speaker_index(seg.speaker_id)].emplace_back(seg.onset_s, seg.end_s());
  }
  const TimelineStats s = sweep(speaker_events(std::move(per)), session_len_s);
  SpeechRatios r;
  r.overlap_ratio = s.speech > 0.0 ? s.overlap / s.speech : 0.0;
  r.silence_ratio = s.silence / session_len_s;
  return r;
}

PosteriorMatrix corrupt_posteriors(const PresenceMatrix &truth, double flip_noise,
                                   int blur_frames, std::uint64_t seed) {
  if (!(flip_noise >= 0.0 && flip_noise < 1.0)) {
    throw ValidationError("flip_noise must lie in [0, 1)");
  }
  if (blur_frames < 0) throw ValidationError("blur_frames must be non-negative");
  const double hi = 1.0 - kProbClamp;
  const double saturation = std::log(hi / kProbClamp);
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Matrix &y = truth.values();
  Matrix p(y.rows(), y.cols());
  for (Eigen::Index k = 0; k < y.rows(); ++k) {
    for (Eigen::Index t = 0; t < y.cols(); ++t) {
      const double base = y(k, t) != 0.0 ? hi : kProbClamp;
      if (flip_noise == 0.0) {
        p(k, t) = base;
        continue;
      }
      const double logit = std::log(base / (1.0 - base)) + flip_noise * saturation * gauss(rng);
      p(k, t) = 1.0 / (1.0 + std::exp(-logit));
    }
  }
  if (blur_frames > 1) {
    const Eigen::Index left = blur_frames / 2;
    const Eigen::Index right = blur_frames - 1 - left;
    Matrix blurred(p.rows(), p.cols());
    for (Eigen::Index k = 0; k < p.rows(); ++k) {
      for (Eigen::Index t = 0; t < p.cols(); ++t) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, t - left);
        const Eigen::Index hi_t = std::min<Eigen::Index>(p.cols() - 1, t + right);
        blurred(k, t) = p.row(k).segment(lo, hi_t - lo + 1).mean();
      }
    }
    p = std::move(blurred);
  }
  p = p.cwiseMax(0.0).cwiseMin(1.0);
  return PosteriorMatrix(std::move(p), truth.grid());
}

const std::vector<std::string> &sim_lexicon() {
  static const std::vector<std::string> lexicon{
      "the", "and", "that", "have", "with", "this", "from", "they", "would", "there",
      "their", "what", "about", "which", "when", "make", "like", "time", "just", "know",
      "people", "into", "year", "good", "some", "could", "them", "other", "than", "then",
      "look", "only", "come", "over", "think", "also", "back", "after", "work", "first",
      "well", "even", "want", "because", "these", "give", "most", "morning", "evening", "weather",
      "family", "really", "maybe", "probably", "actually", "together", "important", "different", "business", "problem",
      "question", "government", "company", "system", "program", "number", "country", "service", "interest", "remember",
      "strength", "hello", "again", "yesterday", "tomorrow", "coffee", "water", "music", "garden", "window",
      "station", "library", "computer", "telephone", "umbrella", "banana", "animal", "holiday", "weekend", "minute",
      "second", "already", "always", "never", "perhaps", "certainly", "exactly", "definitely", "anyway", "okay"};
  return lexicon;
}

void write_session_files(const std::filesystem::path &dir, const SimSession &session) {
  std::filesystem::create_directories(dir);
  const std::string id = session.annotation.session_id();
  write_text_file(dir / (id + ".rttm"), write_rttm(session.annotation));
  save_matrix(dir / (id + ".features.sfm"), session.features);
  save_matrix(dir / (id + ".truth.sfm"), session.truth.values());

  TranscriptSample sample;
  sample.session_id = id;
  sample.offset_s = 0.0;
  sample.duration_s = session.truth.grid().duration_s();
  sample.words = session.words;
  sample.text = build_sst(session.words, SstLevel::kWord).to_string();
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::app);
  if (!manifest) throw ValidationError("cannot append to " + (dir / "manifest.jsonl").string());
  manifest << to_manifest_line(sample) << '\n';
}

}  // namespace sortform
