#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sortform/errors.hpp"
#include "sortform/kernels.hpp"
#include "sortform/matrix_io.hpp"
#include "sortform/metrics.hpp"
#include "sortform/nn/checkpoint.hpp"
#include "sortform/nn/train.hpp"
#include "sortform/objectives.hpp"
#include "sortform/simulator.hpp"
#include "sortform/sorting.hpp"
#include "sortform/transcripts.hpp"

namespace sortform::cli {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  bool json = false;
  unsigned threads = 1;
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ordered_json mapping_json(const Permutation &p) { return ordered_json(p.mapping()); }

PosteriorMatrix load_posteriors(const std::string &path, double frame) {
  Matrix m = load_matrix(path);
  const int frames = static_cast<int>(m.cols());
  return PosteriorMatrix(std::move(m), FrameGrid(frame, frames));
}

PresenceMatrix load_truth(const std::string &path, double frame, int frames) {
  if (fs::path(path).extension() == ".rttm") {
    return quantize(parse_rttm(read_text_file(path)), FrameGrid(frame, frames));
  }
  Matrix m = load_matrix(path);
  const int t = static_cast<int>(m.cols());
  return PresenceMatrix(std::move(m), FrameGrid(frame, t));
}

std::vector<std::string> read_lines(const std::string &path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  SimConfig cfg;
  std::size_t count = 1;
  std::string out_dir;
};

int cmd_simulate(SimulateOpts o, const Globals &g, std::ostream &out) {
  o.cfg.seed = g.seed;
  const auto sessions = simulate_sessions(o.cfg, o.count, g.threads);
  ordered_json records = ordered_json::array();
  for (const auto &s : sessions) {
    if (!o.out_dir.empty()) write_session_files(o.out_dir, s);
    const auto r = measure_ratios(s.annotation, o.cfg.session_len_s);
    records.push_back({{"session_id", s.annotation.session_id()},
                       {"segments", s.annotation.segments().size()},
                       {"frames", s.truth.num_frames()},
                       {"overlap_ratio", r.overlap_ratio},
                       {"silence_ratio", r.silence_ratio}});
  }
  if (g.json) {
    out << records.dump() << "\n";
  } else {
    out << "session            segments  frames  overlap  silence\n";
    for (const auto &r : records) {
      char line[160];
      std::snprintf(line, sizeof line, "%-18s %8zu %7d  %7.4f  %7.4f\n",
                    r["session_id"].get<std::string>().c_str(), r["segments"].get<std::size_t>(),
                    r["frames"].get<int>(), r["overlap_ratio"].get<double>(),
                    r["silence_ratio"].get<double>());
      out << line;
    }
  }
  return kExitOk;
}

// -------------------------------------------------------------------- loss

struct LossOpts {
  std::string ref, post, kind = "hybrid";
  double alpha = 0.5;
  double frame = kDefaultFrameLen;
};

int cmd_loss(const LossOpts &o, const Globals &g, std::ostream &out) {
  const PosteriorMatrix p = load_posteriors(o.post, o.frame);
  const PresenceMatrix y = load_truth(o.ref, o.frame, static_cast<int>(p.num_frames()));
  const LossKind kind = parse_loss_kind(o.kind);
  const HybridConfig hc(o.alpha);
  const LossReport h = hybrid_loss(y, p, hc);
  const double chosen = evaluate_loss(y, p, LossSpec{kind, hc}).value;
  if (g.json) {
    ordered_json j;
    j["sort"] = *h.sort_value;
    j["pil"] = *h.pil_value;
    j["hybrid"] = h.value;
    j["eta"] = mapping_json(h.permutation_used);
    j["pi"] = mapping_json(*h.pil_permutation);
    j["kind"] = to_string(kind);
    j["alpha"] = o.alpha;
    j["value"] = chosen;
    out << j.dump() << "\n";
  } else {
    out << "sort    " << fmt(*h.sort_value) << "  eta " << h.permutation_used.to_string() << "\n"
        << "pil     " << fmt(*h.pil_value) << "  pi  " << h.pil_permutation->to_string() << "\n"
        << "hybrid  " << fmt(h.value) << "  alpha " << fmt(o.alpha, 3) << "\n"
        << to_string(kind) << " = " << fmt(chosen) << "\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------------- der

struct DerOpts {
  std::string ref, hyp;
  double collar = 0.25;
};

int cmd_der(const DerOpts &o, const Globals &g, std::ostream &out) {
  const auto d = der(parse_rttm(read_text_file(o.ref)), parse_rttm(read_text_file(o.hyp)), o.collar);
  out << (g.json ? to_json(d) + "\n" : to_table(d));
  return kExitOk;
}

// ------------------------------------------------------------- postprocess

struct PostOpts {
  std::string post, params_file, out_path, session = "session";
  double frame = kDefaultFrameLen;
  std::optional<double> onset, offset, pad_on, pad_off, min_on, min_off;
};

int cmd_postprocess(const PostOpts &o, const Globals &g, std::ostream &out) {
  PostProcessParams prm;
  if (!o.params_file.empty()) prm = parse_postprocess_params(read_text_file(o.params_file));
  if (o.onset) prm.onset_threshold = *o.onset;
  if (o.offset) prm.offset_threshold = *o.offset;
  if (o.pad_on) prm.onset_pad_s = *o.pad_on;
  if (o.pad_off) prm.offset_pad_s = *o.pad_off;
  if (o.min_on) prm.min_duration_on_s = *o.min_on;
  if (o.min_off) prm.min_duration_off_s = *o.min_off;
  prm.validate();
  const auto ann = post_process(load_posteriors(o.post, o.frame), prm, o.session);
  const std::string rttm = write_rttm(ann);
  if (!o.out_path.empty()) write_text_file(o.out_path, rttm);
  if (g.json) {
    ordered_json segs = ordered_json::array();
    for (const auto &s : ann.segments()) {
      segs.push_back({{"speaker", s.speaker_id}, {"onset", s.onset_s}, {"duration", s.duration_s}});
    }
    out << ordered_json{{"session_id", ann.session_id()}, {"segments", segs}}.dump() << "\n";
  } else if (o.out_path.empty()) {
    out << rttm;
  }
  return kExitOk;
}

// -------------------------------------------------------------------- sort

struct SortOpts {
  std::string post, out_path;
  double frame = kDefaultFrameLen;
  double threshold = 0.5;
};

int cmd_sort(const SortOpts &o, const Globals &g, std::ostream &out) {
  const PosteriorMatrix p = load_posteriors(o.post, o.frame);
  const AtoCheck before = is_ato_sorted(p, o.threshold);
  const auto r = ats_sort(p, o.threshold);
  if (!o.out_path.empty()) save_matrix(o.out_path, r.sorted_matrix.values());
  const auto arrivals = arrival_times(p.values(), o.threshold);
  if (g.json) {
    ordered_json a = ordered_json::array();
    for (const auto &t : arrivals) a.push_back(t.is_never() ? ordered_json(nullptr) : ordered_json(t.frame()));
    out << ordered_json{{"eta", mapping_json(r.eta)},
                        {"arrivals", a},
                        {"was_sorted", before.compliant},
                        {"violations", before.violations}}
               .dump()
        << "\n";
  } else {
    out << "eta " << r.eta.to_string() << "\n";
    for (std::size_t k = 0; k < arrivals.size(); ++k) {
      out << "row " << k << " arrival "
          << (arrivals[k].is_never() ? std::string("never") : std::to_string(arrivals[k].frame())) << "\n";
    }
    out << "input " << (before.compliant ? "already" : "not") << " in arrival-time order\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------- train-toy

struct TrainOpts {
  nn::TrainConfig cfg;
  std::string loss = "sort";
  double alpha = 0.5;
  std::string pe = "sinusoidal";
  std::size_t train_sessions = 1000;
  std::size_t heldout = 100;
  double len = 16.0;
  int speakers = 2;
  int model_dim = 32, heads = 4, layers = 2;
  std::string out_dir;
  int log_every = 0;
};

std::vector<nn::TrainingExample> toy_examples(const std::vector<SimSession> &sessions) {
  std::vector<nn::TrainingExample> out;
  out.reserve(sessions.size());
  for (const auto &s : sessions) out.push_back({nn::FeatureSequence(s.features), s.truth});
  return out;
}

int cmd_train(TrainOpts o, const Globals &g, std::ostream &out, std::ostream &err) {
  SimConfig sim;
  sim.num_speakers = o.speakers;
  sim.session_len_s = o.len;
  sim.seed = derive_seed(g.seed, 100);
  const auto train_set = toy_examples(simulate_sessions(sim, o.train_sessions, g.threads));
  sim.seed = derive_seed(g.seed, 200);
  const auto held_sessions = simulate_sessions(sim, o.heldout, g.threads);
  const auto held = toy_examples(held_sessions);

  nn::ModelShape shape;
  shape.input_dim = sim.feature_dim;
  shape.model_dim = o.model_dim;
  shape.heads = o.heads;
  shape.layers = o.layers;
  shape.ff_dim = 4 * o.model_dim;
  shape.num_speakers = o.speakers;
  shape.positional_mode = nn::parse_positional_mode(o.pe);
  shape.max_frames = std::max(shape.max_frames, static_cast<int>(held.front().features.num_frames()));
  o.cfg.loss = LossSpec{parse_loss_kind(o.loss), HybridConfig(o.alpha)};
  o.cfg.seed = g.seed;

  const auto result = nn::train(train_set, shape, o.cfg, [&](int step, double loss) {
    if (o.log_every > 0 && step % o.log_every == 0) err << "step " << step << " loss " << fmt(loss) << "\n";
  });
  if (!o.out_dir.empty()) nn::save_checkpoint(o.out_dir, result.params);

  const auto ato = nn::evaluate_ato(result.params, held);
  double errors = 0.0, scored = 0.0, heldout_loss = 0.0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    const auto p = nn::forward(held[i].features, result.params, sim.frame_len_s);
    const auto d = der(held_sessions[i].annotation, dequantize(nn::binarize(p)), 0.0);
    errors += d.miss_s + d.false_alarm_s + d.confusion_s;
    scored += d.scored_speech_s;
    heldout_loss += evaluate_loss(held[i].truth, p, o.cfg.loss).value;
  }
  heldout_loss /= static_cast<double>(held.size());
  const double final_loss = result.history.loss.back();
  if (g.json) {
    out << ordered_json{{"steps", o.cfg.steps},
                        {"loss", to_string(o.cfg.loss.kind)},
                        {"positional_mode", o.pe},
                        {"final_train_loss", final_loss},
                        {"heldout_loss", heldout_loss},
                        {"ato_compliance", ato.aligned_compliance},
                        {"raw_ato_compliance", ato.raw_compliance},
                        {"der", errors / scored}}
               .dump()
        << "\n";
  } else {
    out << "steps              " << o.cfg.steps << "\n"
        << "final train loss   " << fmt(final_loss) << "\n"
        << "held-out loss      " << fmt(heldout_loss) << "\n"
        << "ATO compliance     " << fmt(ato.aligned_compliance, 3) << " (raw " << fmt(ato.raw_compliance, 3)
        << ")\n"
        << "DER (collar 0)     " << fmt(errors / scored, 4) << "\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------- gradcheck

struct GradOpts {
  std::string loss = "sort";
  double alpha = 0.5;
  std::string pe = "sinusoidal";
  std::size_t coords = 100;
  int frames = 10;
  double tol = 1e-5;
};

int cmd_gradcheck(const GradOpts &o, const Globals &g, std::ostream &out) {
  nn::ModelShape shape;
  shape.input_dim = 6;
  shape.model_dim = 8;
  shape.heads = 2;
  shape.ff_dim = 32;
  shape.num_speakers = 3;
  shape.positional_mode = nn::parse_positional_mode(o.pe);
  shape.max_frames = std::max(o.frames, 1);
  const auto params = nn::init_params(shape, g.seed);
  std::mt19937_64 rng(derive_seed(g.seed, 1));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution on(0.4);
  std::vector<nn::TrainingExample> batch;
  for (int b = 0; b < 2; ++b) {
    Matrix x(shape.input_dim, o.frames), y(shape.num_speakers, o.frames);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = on(rng) ? 1.0 : 0.0;
    batch.push_back({nn::FeatureSequence(x), PresenceMatrix(y, FrameGrid(kDefaultFrameLen, o.frames))});
  }
  const auto r = nn::grad_check(params, batch, LossSpec{parse_loss_kind(o.loss), HybridConfig(o.alpha)},
                                o.coords, derive_seed(g.seed, 2));
  const bool ok = r.finite && r.max_rel_error < o.tol;
  if (g.json) {
    out << ordered_json{{"loss", o.loss},
                        {"coordinates", r.coordinates},
                        {"max_rel_error", r.max_rel_error},
                        {"finite", r.finite},
                        {"pass", ok}}
               .dump()
        << "\n";
  } else {
    out << "loss " << o.loss << ", " << r.coordinates << " coordinates, max relative error "
        << r.max_rel_error << (ok ? "  ok" : "  FAIL") << "\n";
  }
  return ok ? kExitOk : kExitInvalid;
}

// --------------------------------------------------------------- propcheck

struct PropOpts {
  int trials = 100;
  int frames = 5;
  int dim = 8;
  int heads = 2;
};

int cmd_propcheck(const PropOpts &o, const Globals &g, std::ostream &out) {
  if (o.trials < 1 || o.frames < 2) throw ValidationError("propcheck needs trials >= 1 and frames >= 2");
  std::mt19937_64 rng(g.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto randn = [&](Eigen::Index r, Eigen::Index c, double s) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = s * gauss(rng);
    return m;
  };
  const auto shuffled = [&](int n) {
    std::vector<int> m(static_cast<std::size_t>(n));
    std::iota(m.begin(), m.end(), 0);
    do {
      std::shuffle(m.begin(), m.end(), rng);
    } while (Permutation(m).is_identity());
    return Permutation(m);
  };

  nn::ModelShape shape;
  shape.input_dim = o.dim;
  shape.model_dim = o.dim;
  shape.heads = o.heads;
  shape.ff_dim = 4 * o.dim;
  shape.positional_mode = nn::PositionalMode::kNone;
  const auto plain = nn::init_params(shape, derive_seed(g.seed, 1));
  shape.positional_mode = nn::PositionalMode::kSinusoidal;
  const auto positioned = nn::init_params(shape, derive_seed(g.seed, 1));

  double mha_max = 0.0, pooled_max = 0.0, pe_min = std::numeric_limits<double>::infinity();
  const double s = 1.0 / std::sqrt(static_cast<double>(o.dim));
  for (int trial = 0; trial < o.trials; ++trial) {
    const nn::MhaParams mp{randn(o.dim, o.dim, s), randn(o.dim, o.dim, s), randn(o.dim, o.dim, s),
                           randn(o.dim, o.dim, s), o.heads};
    const Matrix x = randn(o.frames, o.dim, 1.0);
    const Permutation perm = shuffled(o.frames);
    mha_max = std::max(mha_max, (nn::mha_forward(perm.apply_rows(x), mp) - perm.apply_rows(nn::mha_forward(x, mp)))
                                    .cwiseAbs()
                                    .maxCoeff());
    const nn::FeatureSequence seq(x.transpose());
    pooled_max = std::max(pooled_max, (nn::pooled_encoding(seq.permuted_frames(perm), plain) -
                                       nn::pooled_encoding(seq, plain))
                                          .cwiseAbs()
                                          .maxCoeff());
    pe_min = std::min(pe_min, nn::equivariance_residual(positioned, seq, perm));
  }
  const bool ok = mha_max < 1e-8 && pooled_max < 1e-8 && pe_min > 1e-3;
  if (g.json) {
    out << ordered_json{{"trials", o.trials},
                        {"mha_equivariance_max", mha_max},
                        {"pooled_invariance_max", pooled_max},
                        {"positional_residual_min", pe_min},
                        {"pass", ok}}
               .dump()
        << "\n";
  } else {
    out << "MHA equivariance residual (max)        " << mha_max << "\n"
        << "pooled no-PE invariance residual (max) " << pooled_max << "\n"
        << "sinusoidal-PE residual (min)           " << pe_min << "\n"
        << (ok ? "ok" : "FAIL") << "\n";
  }
  return ok ? kExitOk : kExitInvalid;
}

// ------------------------------------------------------------------ kernel

struct KernelOpts {
  std::string action, state, post, out_path;
  bool zero_bank = false;
};

int cmd_kernel(const KernelOpts &o, const Globals &g, std::ostream &out) {
  const Matrix a = load_matrix(o.state);
  const PosteriorMatrix p = load_posteriors(o.post, kDefaultFrameLen);
  KernelBank bank = build_kernel_bank(static_cast<int>(p.num_speakers()), static_cast<int>(a.rows()));
  if (o.zero_bank) bank = bank.nullified();
  const Matrix result = o.action == "encode" ? encode_speakers(a, p, bank) : strip_speakers(a, p, bank);
  if (!o.out_path.empty()) {
    save_matrix(o.out_path, result);
  } else if (!g.json) {
    out << write_csv_matrix(result);
  }
  if (g.json) {
    out << ordered_json{{"action", o.action}, {"rows", result.rows()}, {"cols", result.cols()}}.dump() << "\n";
  }
  return kExitOk;
}

// -------------------------------------------------------------- timestamps

struct TimestampOpts {
  std::string segments, session = "session";
};

// Input lines: "<speaker> <onset_s> <duration_s> word word ...".
int cmd_timestamps(const TimestampOpts &o, const Globals &g, std::ostream &out) {
  std::vector<AttributedWord> all;
  int line_no = 0;
  for (const auto &line : read_lines(o.segments)) {
    ++line_no;
    std::istringstream fields(line);
    std::string speaker, onset, duration;
    if (!(fields >> speaker >> onset >> duration)) {
      throw ParseError(static_cast<std::size_t>(line_no), "expected '<speaker> <onset> <duration> words...'");
    }
    std::vector<std::string> words;
    for (std::string w; fields >> w;) words.push_back(w);
    double t0 = 0.0, d = 0.0;
    try {
      t0 = std::stod(onset);
      d = std::stod(duration);
    } catch (const std::exception &) {
      throw ParseError(static_cast<std::size_t>(line_no), "onset and duration must be numbers");
    }
    for (auto &w : approximate_word_timestamps(speaker, t0, d, words)) all.push_back(std::move(w));
  }
  if (g.json) {
    TranscriptSample s;
    s.session_id = o.session;
    double end = 0.0;
    for (const auto &w : all) end = std::max(end, w.end_s());
    s.duration_s = end;
    s.words = all;
    s.text = all.empty() ? "" : build_sst(all, SstLevel::kWord).to_string();
    out << to_manifest_line(s) << "\n";
  } else {
    for (const auto &w : all) {
      out << w.speaker_id << " " << fmt(w.onset_s, 3) << " " << fmt(w.duration_s, 3) << " " << w.word << "\n";
    }
  }
  return kExitOk;
}

// --------------------------------------------------------------------- sst

struct SstOpts {
  std::string action, manifest, text, level = "word";
};

int cmd_sst(const SstOpts &o, const Globals &g, std::ostream &out) {
  const SstLevel level = o.level == "segment" ? SstLevel::kSegment : SstLevel::kWord;
  if (o.level != "word" && o.level != "segment") throw ValidationError("level must be word or segment");
  if (o.action == "build") {
    if (o.manifest.empty()) throw ValidationError("sst build needs --manifest");
    ordered_json arr = ordered_json::array();
    for (const auto &line : read_lines(o.manifest)) {
      const auto sample = parse_manifest_line(line);
      const std::string sst = build_sst(sample.words, level).to_string();
      if (g.json) {
        arr.push_back({{"session_id", sample.session_id}, {"text", sst}});
      } else {
        out << sst << "\n";
      }
    }
    if (g.json) out << arr.dump() << "\n";
    return kExitOk;
  }
  const std::string text = !o.text.empty() ? o.text : (o.manifest.empty() ? "" : read_text_file(o.manifest));
  if (text.empty()) throw ValidationError("sst parse needs --text or --manifest");
  const auto parsed = parse_sst(TokenTranscript::from_string(text, level));
  if (g.json) {
    ordered_json arr = ordered_json::array();
    for (const auto &[spk, w] : parsed) arr.push_back({{"spk", spk}, {"w", w}});
    out << arr.dump() << "\n";
  } else {
    for (const auto &[spk, w] : parsed) out << spk << " " << w << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------- cpwer

struct CpwerOpts {
  std::string ref, hyp;
};

int cmd_cpwer(const CpwerOpts &o, const Globals &g, std::ostream &out) {
  const auto ref_tokens = TokenTranscript::from_string(read_text_file(o.ref));
  const auto hyp_tokens = TokenTranscript::from_string(read_text_file(o.hyp));
  const auto ref = words_by_speaker(parse_sst(ref_tokens));
  const auto hyp = words_by_speaker(parse_sst(hyp_tokens));
  const double cp = cpwer(ref, hyp);
  const double plain = wer(ref_tokens.tokens, hyp_tokens.tokens);
  if (g.json) {
    out << ordered_json{{"cpwer", cp}, {"wer", plain}, {"ref_speakers", ref.size()}, {"hyp_speakers", hyp.size()}}
               .dump()
        << "\n";
  } else {
    out << "cpWER " << fmt(cp, 4) << "\nWER   " << fmt(plain, 4) << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------- clean

struct CleanOpts {
  std::string manifest, out_path;
};

int cmd_clean(const CleanOpts &o, const Globals &g, std::ostream &out) {
  std::map<std::string, std::size_t> counts;
  std::string accepted;
  std::size_t total = 0;
  for (const auto &line : read_lines(o.manifest)) {
    ++total;
    auto sample = parse_manifest_line(line);
    const auto r = clean_sample(sample);
    ++counts[r.accepted ? "accepted" : to_string(r.reason)];
    if (r.accepted) {
      sample.text = r.transcript.to_string();
      accepted += to_manifest_line(sample) + "\n";
    }
  }
  if (!o.out_path.empty()) write_text_file(o.out_path, accepted);
  if (g.json) {
    ordered_json j{{"total", total}};
    for (const auto &[k, v] : counts) j[k] = v;
    out << j.dump() << "\n";
  } else {
    out << "total " << total << "\n";
    for (const auto &[k, v] : counts) out << k << " " << v << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string> &argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Diarization objectives, scoring and toy training toolkit", "sortform"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file supplying any flag; flags override it");
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->envname("SORTFORM_SEED");
  app.add_flag("--json", g.json, "Print JSON instead of tables");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  SimulateOpts sim;
  auto *c_sim = app.add_subcommand("simulate", "Generate synthetic sessions");
  c_sim->add_option("--k", sim.cfg.num_speakers, "Speakers per session")->check(CLI::Range(1, 4));
  c_sim->add_option("--len", sim.cfg.session_len_s, "Session length in seconds");
  c_sim->add_option("--count", sim.count, "Number of sessions");
  c_sim->add_option("--out", sim.out_dir, "Output directory");
  c_sim->add_option("--overlap", sim.cfg.target_overlap_ratio, "Target overlap ratio");
  c_sim->add_option("--silence", sim.cfg.target_silence_ratio, "Target silence ratio");
  c_sim->add_option("--turn-mean", sim.cfg.turn_mean_s, "Mean turn length in seconds");
  c_sim->add_option("--dim", sim.cfg.feature_dim, "Feature dimension");
  c_sim->add_option("--scale", sim.cfg.signature_scale, "Speaker signature scale");
  c_sim->add_option("--noise", sim.cfg.noise_sigma, "Feature noise sigma");
  c_sim->add_option("--frame", sim.cfg.frame_len_s, "Frame length in seconds");

  LossOpts loss;
  auto *c_loss = app.add_subcommand("loss", "Sort, PIL and hybrid losses of posteriors against a reference");
  c_loss->add_option("--ref", loss.ref, "Reference RTTM or presence matrix")->required();
  c_loss->add_option("--post", loss.post, "Posterior matrix (SFM1 or CSV)")->required();
  c_loss->add_option("--kind", loss.kind, "bce, sort, pil or hybrid");
  c_loss->add_option("--alpha", loss.alpha, "Hybrid weight on the sort loss");
  c_loss->add_option("--frame", loss.frame, "Frame length in seconds");

  DerOpts dopt;
  auto *c_der = app.add_subcommand("der", "Diarization error rate");
  c_der->add_option("--ref", dopt.ref, "Reference RTTM")->required();
  c_der->add_option("--hyp", dopt.hyp, "Hypothesis RTTM")->required();
  c_der->add_option("--collar", dopt.collar, "Collar in seconds");

  PostOpts post;
  auto *c_post = app.add_subcommand("postprocess", "Turn posteriors into segments");
  c_post->add_option("--post", post.post, "Posterior matrix")->required();
  c_post->add_option("--params", post.params_file, "Post-processing parameter file");
  c_post->add_option("--out", post.out_path, "Output RTTM (stdout if omitted)");
  c_post->add_option("--session", post.session, "Session id");
  c_post->add_option("--frame", post.frame, "Frame length in seconds");
  c_post->add_option("--onset", post.onset, "Onset threshold");
  c_post->add_option("--offset", post.offset, "Offset threshold");
  c_post->add_option("--pad-onset", post.pad_on, "Onset padding in seconds");
  c_post->add_option("--pad-offset", post.pad_off, "Offset padding in seconds");
  c_post->add_option("--min-on", post.min_on, "Minimum segment duration");
  c_post->add_option("--min-off", post.min_off, "Minimum gap duration");

  SortOpts sort;
  auto *c_sort = app.add_subcommand("sort", "Passive arrival-time sort of a posterior matrix");
  c_sort->add_option("--post", sort.post, "Posterior matrix")->required();
  c_sort->add_option("--out", sort.out_path, "Sorted matrix output");
  c_sort->add_option("--threshold", sort.threshold, "Binarization threshold for arrival keys");

  TrainOpts tr;
  auto *c_train = app.add_subcommand("train-toy", "Train the toy diarizer on simulated sessions");
  c_train->add_option("--steps", tr.cfg.steps, "Optimizer steps");
  c_train->add_option("--batch", tr.cfg.batch_size, "Batch size");
  c_train->add_option("--lr", tr.cfg.peak_lr, "Peak learning rate");
  c_train->add_option("--warmup", tr.cfg.warmup_steps, "Warmup steps");
  c_train->add_option("--min-lr", tr.cfg.min_lr, "Learning-rate floor");
  c_train->add_option("--weight-decay", tr.cfg.weight_decay, "Decoupled weight decay");
  c_train->add_option("--dropout", tr.cfg.dropout, "Dropout rate");
  c_train->add_option("--loss", tr.loss, "sort, pil, hybrid or bce");
  c_train->add_option("--alpha", tr.alpha, "Hybrid weight");
  c_train->add_option("--pe", tr.pe, "none, sinusoidal or learned");
  c_train->add_option("--train-sessions", tr.train_sessions, "Training sessions");
  c_train->add_option("--heldout", tr.heldout, "Held-out sessions")->check(CLI::PositiveNumber);
  c_train->add_option("--len", tr.len, "Session length in seconds");
  c_train->add_option("--k", tr.speakers, "Speakers")->check(CLI::Range(1, 4));
  c_train->add_option("--d", tr.model_dim, "Model width");
  c_train->add_option("--heads", tr.heads, "Attention heads");
  c_train->add_option("--layers", tr.layers, "Encoder blocks");
  c_train->add_option("--out", tr.out_dir, "Checkpoint directory");
  c_train->add_option("--log-every", tr.log_every, "Log training loss to stderr every N steps");

  GradOpts go;
  auto *c_grad = app.add_subcommand("gradcheck", "Backprop versus finite differences");
  c_grad->add_option("--loss", go.loss, "sort, pil, hybrid or bce");
  c_grad->add_option("--alpha", go.alpha, "Hybrid weight");
  c_grad->add_option("--pe", go.pe, "none, sinusoidal or learned");
  c_grad->add_option("--coords", go.coords, "Sampled coordinates");
  c_grad->add_option("--frames", go.frames, "Frames per example")->check(CLI::PositiveNumber);
  c_grad->add_option("--tol", go.tol, "Maximum relative error");

  PropOpts po;
  auto *c_prop = app.add_subcommand("propcheck", "Attention permutation property suite");
  c_prop->add_option("--trials", po.trials, "Random trials");
  c_prop->add_option("--frames", po.frames, "Sequence length");
  c_prop->add_option("--dim", po.dim, "Model width");
  c_prop->add_option("--heads", po.heads, "Attention heads");

  KernelOpts ko;
  auto *c_kernel = app.add_subcommand("kernel", "Add or remove sinusoidal speaker kernels");
  c_kernel->add_option("action", ko.action, "encode or strip")->required()->check(CLI::IsMember({"encode", "strip"}));
  c_kernel->add_option("--state", ko.state, "Encoder states, M x T")->required();
  c_kernel->add_option("--post", ko.post, "Posteriors, K x T")->required();
  c_kernel->add_option("--out", ko.out_path, "Output matrix");
  c_kernel->add_flag("--zero-bank", ko.zero_bank, "Use an all-zero kernel bank");

  TimestampOpts to;
  auto *c_ts = app.add_subcommand("timestamps", "Syllable-rate word timestamps for untimed segments");
  c_ts->add_option("--segments", to.segments, "Lines of '<speaker> <onset> <duration> words...'")->required();
  c_ts->add_option("--session", to.session, "Session id for JSON output");

  SstOpts so;
  auto *c_sst = app.add_subcommand("sst", "Build or parse speaker-token transcripts");
  c_sst->add_option("action", so.action, "build or parse")->required()->check(CLI::IsMember({"build", "parse"}));
  c_sst->add_option("--manifest", so.manifest, "JSON-lines manifest (build) or SST text file (parse)");
  c_sst->add_option("--text", so.text, "SST string to parse");
  c_sst->add_option("--level", so.level, "word or segment");

  CpwerOpts co;
  auto *c_cp = app.add_subcommand("cpwer", "Concatenated minimum-permutation WER of SST files");
  c_cp->add_option("--ref", co.ref, "Reference SST text")->required();
  c_cp->add_option("--hyp", co.hyp, "Hypothesis SST text")->required();

  CleanOpts cl;
  auto *c_clean = app.add_subcommand("clean", "Apply the transcript cleaning rules to a manifest");
  c_clean->add_option("--manifest", cl.manifest, "JSON-lines manifest")->required();
  c_clean->add_option("--out", cl.out_path, "Accepted samples manifest");

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    CLI::App *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim, g, out);
    if (c_loss->parsed()) return cmd_loss(loss, g, out);
    if (c_der->parsed()) return cmd_der(dopt, g, out);
    if (c_post->parsed()) return cmd_postprocess(post, g, out);
    if (c_sort->parsed()) return cmd_sort(sort, g, out);
    if (c_train->parsed()) return cmd_train(tr, g, out, err);
    if (c_grad->parsed()) return cmd_gradcheck(go, g, out);
    if (c_prop->parsed()) return cmd_propcheck(po, g, out);
    if (c_kernel->parsed()) return cmd_kernel(ko, g, out);
    if (c_ts->parsed()) return cmd_timestamps(to, g, out);
    if (c_sst->parsed()) return cmd_sst(so, g, out);
    if (c_cp->parsed()) return cmd_cpwer(co, g, out);
    if (c_clean->parsed()) return cmd_clean(cl, g, out);
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  err << app.help();
  return kExitUsage;
}

int run(int argc, char **argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sortform::cli
