#include "catchup/error.hpp"
#include "catchup/segmenter.hpp"

#include <gtest/gtest.h>

using namespace catchup;

namespace {

const ParticipantId kA{"A"};

TimedToken tok(std::string w, Timestamp on, Timestamp off, const ParticipantId& who = kA) {
  return TimedToken{who, std::move(w), on, off};
}

// Tokens whose inter-token gaps are `gaps`, each word lasting 300 ms.
std::vector<TimedToken> with_gaps(const std::vector<Timestamp>& gaps) {
  std::vector<TimedToken> out;
  Timestamp t = 0;
  out.push_back(tok("w1", t, t + 300));
  t += 300;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    t += gaps[i];
    out.push_back(tok("w" + std::to_string(i + 2), t, t + 300));
    t += 300;
  }
  return out;
}

}  // namespace

TEST(SegmentUtterances, GapRuleSplitsAtThreshold) {
  const auto tokens = with_gaps({200, 900, 150});
  const auto us = segment_utterances(tokens, 700);
  ASSERT_EQ(us.size(), 2u);
  EXPECT_EQ(us[0].text, "w1 w2");
  EXPECT_EQ(us[1].text, "w3 w4");
  EXPECT_EQ(us[0].start_ms, 0);
  EXPECT_EQ(us[0].end_ms, 800);
  EXPECT_EQ(us[1].start_ms, 1700);
  EXPECT_EQ(us[1].utterance_id, "u2");
  EXPECT_EQ(us[1].seq, 2u);
}

TEST(SegmentUtterances, GapEqualToThresholdSplits) {
  EXPECT_EQ(segment_utterances(with_gaps({700}), 700).size(), 2u);
  EXPECT_EQ(segment_utterances(with_gaps({699}), 700).size(), 1u);
}

TEST(SegmentUtterances, SingleToken) {
  const std::vector<TimedToken> tokens{tok("hello", 10, 200)};
  const auto us = segment_utterances(tokens, 700);
  ASSERT_EQ(us.size(), 1u);
  EXPECT_EQ(us[0].text, "hello");
  EXPECT_EQ(us[0].speaker, kA);
}

TEST(SegmentUtterances, NoSplitWhenAllGapsShort) {
  const auto us = segment_utterances(with_gaps({100, 200, 300, 0}), 700);
  ASSERT_EQ(us.size(), 1u);
  EXPECT_EQ(us[0].text, "w1 w2 w3 w4 w5");
}

TEST(SegmentUtterances, EmptyStream) {
  EXPECT_TRUE(segment_utterances({}, 700).empty());
}

TEST(SegmentUtterances, RejectsDisorder) {
  const std::vector<TimedToken> overlap{tok("a", 0, 500), tok("b", 400, 600)};
  try {
    segment_utterances(overlap, 700);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsortedTokens);
  }
  const std::vector<TimedToken> backwards{tok("a", 500, 400)};
  EXPECT_THROW(segment_utterances(backwards, 700), Error);
}

TEST(SegmentUtterances, RejectsMixedSpeakers) {
  const std::vector<TimedToken> mixed{tok("a", 0, 100), tok("b", 200, 300, ParticipantId("B"))};
  EXPECT_THROW(segment_utterances(mixed, 700), Error);
}

TEST(UtteranceSegmenter, IncrementalPushReturnsClosedUtterance) {
  UtteranceSegmenter seg(kA, 700);
  EXPECT_FALSE(seg.push(tok("we", 0, 200)));
  EXPECT_FALSE(seg.push(tok("should", 300, 500)));
  EXPECT_EQ(seg.partial_text(), "we should");
  auto closed = seg.push(tok("vote", 1300, 1500));
  ASSERT_TRUE(closed);
  EXPECT_EQ(closed->text(), "we should");
  EXPECT_EQ(seg.partial_text(), "vote");
}

TEST(UtteranceSegmenter, CloseIfIdleWaitsForFullPause) {
  UtteranceSegmenter seg(kA, 700);
  seg.push(tok("hi", 0, 300));
  EXPECT_FALSE(seg.close_if_idle(999));
  auto closed = seg.close_if_idle(1000);
  ASSERT_TRUE(closed);
  EXPECT_EQ(closed->text(), "hi");
  EXPECT_FALSE(seg.has_open());
  EXPECT_FALSE(seg.close_if_idle(5000));
}

TEST(UtteranceSegmenter, OrderingCheckSurvivesFlush) {
  UtteranceSegmenter seg(kA, 700);
  seg.push(tok("a", 0, 300));
  seg.flush();
  EXPECT_THROW(seg.push(tok("b", 100, 200)), Error);
  EXPECT_NO_THROW(seg.push(tok("c", 300, 400)));
}
