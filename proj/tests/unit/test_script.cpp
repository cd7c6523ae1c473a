#include "catchup/error.hpp"
#include "catchup/script.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace catchup;

namespace {

const std::string kData = CATCHUP_DATA_DIR;

std::string code_and_message(std::string_view text) {
  try {
    parse_script(text);
  } catch (const Error& e) {
    return std::string(to_string(e.code())) + ": " + e.what();
  }
  return "ok";
}

const char* kMinimal = R"({
  "topic": "t",
  "agents": [
    {"id": "A", "role": "pro"},
    {"id": "B", "role": "against"},
    {"id": "C", "role": "less_talkative"}
  ],
  "lines": [
    {"speaker": "A", "text": "one two three"},
    {"speaker": "B", "text": "four five"},
    {"speaker": "C", "text": "six", "start_ms": 9000}
  ]
})";

}  // namespace

TEST(Script, ThreeAgentStudyReplica) {
  const auto s = load_script(kData + "/scripts/study_3_agents.json");
  ASSERT_EQ(s.agents.size(), 3u);
  std::multiset<AgentRole> roles;
  for (const auto& a : s.agents) roles.insert(a.role);
  EXPECT_EQ(roles, (std::multiset<AgentRole>{AgentRole::Pro, AgentRole::Against,
                                             AgentRole::LessTalkative}));
  EXPECT_TRUE(s.study_replica);
  EXPECT_GE(s.duration_ms(), kStudyReplicaMinMs);
  EXPECT_LE(s.duration_ms(), kStudyReplicaMaxMs);
  // The less talkative agent has the fewest lines.
  std::map<ParticipantId, int> lines;
  for (const auto& l : s.lines) ++lines[l.speaker];
  for (const auto& [id, n] : lines) {
    if (id != s.less_talkative().id) EXPECT_GT(n, lines[s.less_talkative().id]);
  }
}

TEST(Script, SevenAgentFileIsTheRedistribution) {
  const auto three = load_script(kData + "/scripts/study_3_agents.json");
  const auto seven = load_script(kData + "/scripts/study_7_agents.json");
  const auto derived = redistribute_to_seven(three);
  ASSERT_EQ(seven.agents.size(), 7u);
  std::set<std::string> pro, against, quiet;
  for (const auto& a : seven.agents) {
    if (a.role == AgentRole::Pro) pro.insert(a.id.str());
    if (a.role == AgentRole::Against) against.insert(a.id.str());
    if (a.role == AgentRole::LessTalkative) quiet.insert(a.id.str());
  }
  EXPECT_EQ(pro, (std::set<std::string>{"MA1", "MA4", "MA7"}));
  EXPECT_EQ(against, (std::set<std::string>{"MA2", "MA5", "MA6"}));
  EXPECT_EQ(quiet, (std::set<std::string>{"MA3"}));
  ASSERT_EQ(seven.lines.size(), three.lines.size());
  ASSERT_EQ(derived.lines.size(), seven.lines.size());
  for (std::size_t i = 0; i < seven.lines.size(); ++i) {
    EXPECT_EQ(seven.lines[i].text, three.lines[i].text);
    EXPECT_EQ(seven.lines[i].start_ms, three.lines[i].start_ms);
    EXPECT_EQ(seven.lines[i].end_ms(), three.lines[i].end_ms());
    EXPECT_EQ(seven.lines[i].speaker, derived.lines[i].speaker);
  }
}

TEST(Script, MinimalAutoTimings) {
  const auto s = parse_script(kMinimal);
  ASSERT_EQ(s.lines.size(), 3u);
  // 150 wpm: 400 ms slots, 320 ms spoken.
  EXPECT_EQ(s.lines[0].start_ms, 0);
  EXPECT_EQ(s.lines[0].words[1].onset_ms, 400);
  EXPECT_EQ(s.lines[0].end_ms(), 800 + 320);
  EXPECT_EQ(s.lines[1].start_ms, s.lines[0].end_ms() + kDefaultTurnGapMs);
  EXPECT_EQ(s.lines[2].start_ms, 9000);
  EXPECT_EQ(s.less_talkative().id, ParticipantId("C"));
  // Canonical form parses back to the same timings.
  const auto again = parse_script(to_json(s).dump());
  for (std::size_t i = 0; i < s.lines.size(); ++i) {
    EXPECT_EQ(again.lines[i].start_ms, s.lines[i].start_ms);
    EXPECT_EQ(again.lines[i].end_ms(), s.lines[i].end_ms());
  }
}

TEST(Script, AutoWordTimings) {
  const auto w = auto_word_timings("a b c", 1000, 300);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].onset_ms, 1000);
  EXPECT_EQ(w[0].offset_ms, 1160);
  EXPECT_EQ(w[2].onset_ms, 1400);
}

TEST(Script, SchemaErrors) {
  std::string two_quiet = kMinimal;
  two_quiet.replace(two_quiet.find("\"against\""), 9, "\"less_talkative\"");
  EXPECT_NE(code_and_message(two_quiet).find("SchemaError"), std::string::npos);
  EXPECT_NE(code_and_message(two_quiet).find("less_talkative"), std::string::npos);

  std::string bad_speaker = kMinimal;
  bad_speaker.replace(bad_speaker.find("\"speaker\": \"B\""), 14, "\"speaker\": \"Q\"");
  EXPECT_NE(code_and_message(bad_speaker).find("lines[1].speaker"), std::string::npos);

  std::string extra = kMinimal;
  extra.replace(extra.find("\"topic\""), 7, "\"mood\": 1, \"topic\"");
  EXPECT_NE(code_and_message(extra).find("mood"), std::string::npos);

  EXPECT_NE(code_and_message("{\n  \"topic\": ,\n}").find("line 2"), std::string::npos);

  std::string overlap = kMinimal;
  overlap.replace(overlap.find("{\"speaker\": \"C\", \"text\": \"six\", \"start_ms\": 9000}"), 48,
                  "{\"speaker\": \"A\", \"text\": \"six\", \"start_ms\": 500}");
  EXPECT_NE(code_and_message(overlap).find("SchemaError"), std::string::npos);

  std::string replica = kMinimal;
  replica.replace(replica.find("\"topic\""), 7, "\"study_replica\": true, \"topic\"");
  EXPECT_NE(code_and_message(replica).find("10 to 11 minutes"), std::string::npos);
}

TEST(Script, MissingFileIsIoError) {
  try {
    load_script("/nonexistent/script.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}
