#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sortform/errors.hpp"
#include "sortform/timeline.hpp"

namespace sortform {
namespace {

TEST(ParseRttm, SingleLine) {
  const auto ann = parse_rttm("SPEAKER s1 1 0.00 2.50 <NA> <NA> A <NA> <NA>\n");
  EXPECT_EQ(ann.session_id(), "s1");
  ASSERT_EQ(ann.segments().size(), 1u);
  EXPECT_EQ(ann.segments()[0].speaker_id, "A");
  EXPECT_DOUBLE_EQ(ann.segments()[0].onset_s, 0.0);
  EXPECT_DOUBLE_EQ(ann.segments()[0].end_s(), 2.5);
}

TEST(ParseRttm, SortsByOnset) {
  const auto ann = parse_rttm(
      "SPEAKER s 1 1.00 2.00 <NA> <NA> B <NA> <NA>\n"
      "SPEAKER s 1 0.00 2.00 <NA> <NA> A <NA> <NA>\n");
  EXPECT_EQ(ann.num_speakers(), 2u);
  EXPECT_EQ(ann.segments()[0].speaker_id, "A");
  EXPECT_EQ(ann.segments()[1].speaker_id, "B");
  EXPECT_EQ(ann.speakers(), (std::vector<std::string>{"A", "B"}));
}

TEST(ParseRttm, ShortLineReportsLineNumber) {
  try {
    parse_rttm(
        "SPEAKER s 1 0.00 1.00 <NA> <NA> A <NA> <NA>\n"
        "SPEAKER s 1 0.00 1.00 <NA> <NA> A\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseRttm, NegativeDurationIsValidationError) {
  EXPECT_THROW(parse_rttm("SPEAKER s 1 0.00 -1.00 <NA> <NA> A <NA> <NA>\n"), ValidationError);
}

TEST(ParseRttm, RejectsNonSpeakerType) {
  EXPECT_THROW(parse_rttm("LEXEME s 1 0.00 1.00 <NA> <NA> A <NA> <NA>\n"), ParseError);
}

TEST(WriteRttm, EmptyAnnotationIsEmptyString) {
  EXPECT_EQ(write_rttm(SessionAnnotation("s", {})), "");
}

TEST(WriteRttm, RoundsToThreeDecimals) {
  const SessionAnnotation ann("s", {{"A", 1.23456, 1.0, {}}});
  EXPECT_EQ(write_rttm(ann), "SPEAKER s 1 1.235 1.000 <NA> <NA> A <NA> <NA>\n");
}

TEST(WriteRttm, RoundTripIsFixedPoint) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  std::uniform_real_distribution<double> len(0.01, 5.0);
  std::vector<Segment> segs;
  for (int i = 0; i < 40; ++i) segs.push_back({"spk" + std::to_string(i % 3), u(rng), len(rng), {}});
  const auto once = parse_rttm(write_rttm(SessionAnnotation("sess", segs)));
  const auto twice = parse_rttm(write_rttm(once));
  ASSERT_EQ(once.segments().size(), twice.segments().size());
  for (std::size_t i = 0; i < once.segments().size(); ++i) {
    EXPECT_EQ(once.segments()[i].speaker_id, twice.segments()[i].speaker_id);
    EXPECT_NEAR(once.segments()[i].onset_s, twice.segments()[i].onset_s, 1e-9);
    EXPECT_NEAR(once.segments()[i].duration_s, twice.segments()[i].duration_s, 1e-9);
  }
  const SessionAnnotation original("sess", segs);
  for (std::size_t i = 0; i < once.segments().size(); ++i) {
    EXPECT_NEAR(once.segments()[i].onset_s, original.segments()[i].onset_s, 5e-4 + 1e-12);
  }
}

TEST(Ctm, RoundTripTwoDecimals) {
  const std::vector<Word> words{{"hello", 0.123, 0.5}, {"world", 0.7, 0.333}};
  const std::string text = write_ctm("s", words);
  EXPECT_EQ(text, "s 1 0.12 0.50 hello\ns 1 0.70 0.33 world\n");
  std::string id;
  const auto back = parse_ctm(text, &id);
  EXPECT_EQ(id, "s");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].text, "world");
  EXPECT_DOUBLE_EQ(back[1].duration_s, 0.33);
}

TEST(Quantize, MidpointRule) {
  const SessionAnnotation ann("s", {{"A", 0.0, 0.24, {}}});
  const auto pm = quantize(ann, FrameGrid(0.08, 5));
  ASSERT_EQ(pm.num_speakers(), 1);
  EXPECT_EQ(pm.values(), (Matrix(1, 5) << 1, 1, 1, 0, 0).finished());
}

TEST(Quantize, OverlapGivesMultipleOnes) {
  const SessionAnnotation ann("s", {{"A", 0.0, 0.4, {}}, {"B", 0.0, 0.4, {}}});
  const auto pm = quantize(ann, FrameGrid(0.08, 5));
  EXPECT_TRUE((pm.values().array() == 1.0).all());
}

TEST(Quantize, DeclaredSilentSpeakerIsZeroRow) {
  const SessionAnnotation ann("s", {}, {"A"});
  const auto pm = quantize(ann, FrameGrid(0.08, 4));
  EXPECT_EQ(pm.values(), Matrix::Zero(1, 4));
}

TEST(Quantize, NoSpeakersIsError) {
  EXPECT_THROW(quantize(SessionAnnotation("s", {}), FrameGrid(0.08, 4)), ValidationError);
}

TEST(Quantize, TruncatesPastGrid) {
  const SessionAnnotation ann("s", {{"A", 0.0, 10.0, {}}});
  const auto pm = quantize(ann, FrameGrid(0.08, 3));
  EXPECT_EQ(pm.values(), Matrix::Ones(1, 3));
}

TEST(Dequantize, RunExtraction) {
  const PresenceMatrix pm((Matrix(2, 4) << 0, 1, 1, 0, 0, 0, 0, 0).finished(), FrameGrid(0.08, 4));
  const auto ann = dequantize(pm);
  ASSERT_EQ(ann.segments().size(), 1u);
  EXPECT_NEAR(ann.segments()[0].onset_s, 0.08, 1e-12);
  EXPECT_NEAR(ann.segments()[0].duration_s, 0.16, 1e-12);
  EXPECT_EQ(ann.num_speakers(), 2u);
}

TEST(Dequantize, QuantizeInvertsOnRandomMatrices) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 4;
    const int t = 1 + static_cast<int>(rng() % 60);
    const PresenceMatrix pm(oracle::random_binary(k, t, rng, 0.5), FrameGrid(0.08, t));
    const auto back = quantize(dequantize(pm), pm.grid());
    ASSERT_EQ(back.values(), pm.values()) << "trial " << trial;
  }
}

TEST(PresenceMatrix, RejectsNonBinary) {
  EXPECT_THROW(PresenceMatrix((Matrix(1, 2) << 0, 0.5).finished(), FrameGrid(0.08, 2)),
               ValidationError);
}

TEST(PosteriorMatrix, RejectsOutOfRange) {
  EXPECT_THROW(PosteriorMatrix((Matrix(1, 2) << 0, 1.5).finished()), ValidationError);
  EXPECT_THROW(PosteriorMatrix((Matrix(1, 1) << std::nan("")).finished()), ValidationError);
}

TEST(Segment, WordsMustLieInside) {
  Segment s{"A", 1.0, 1.0, {{"w", 2.5, 0.1}}};
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(FrameGrid, Covering) {
  const auto g = FrameGrid::covering(16.0, 0.08);
  EXPECT_EQ(g.num_frames, 200);
  EXPECT_THROW(FrameGrid(0.0, 3), ValidationError);
}

}  // namespace
}  // namespace sortform
