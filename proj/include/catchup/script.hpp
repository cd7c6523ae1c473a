#pragma once

#include "catchup/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace catchup {

enum class AgentRole { Pro, Against, LessTalkative };

std::string_view to_string(AgentRole r);

struct ScriptAgent {
  ParticipantId id;
  AgentRole role = AgentRole::Pro;
  std::string name;
  std::string color;
};

struct WordTiming {
  std::string word;
  Timestamp onset_ms = 0;
  Timestamp offset_ms = 0;
};

struct ScriptLine {
  ParticipantId speaker;
  std::string text;
  Timestamp start_ms = 0;
  std::vector<WordTiming> words;

  Timestamp end_ms() const { return words.empty() ? start_ms : words.back().offset_ms; }
};

inline constexpr int kDefaultSpeakingRateWpm = 150;
inline constexpr Timestamp kDefaultTurnGapMs = 800;
inline constexpr Timestamp kStudyReplicaMinMs = 600000;
inline constexpr Timestamp kStudyReplicaMaxMs = 660000;

struct MeetingScript {
  std::string topic;
  bool study_replica = false;
  int speaking_rate_wpm = kDefaultSpeakingRateWpm;
  Timestamp turn_gap_ms = kDefaultTurnGapMs;
  std::vector<ScriptAgent> agents;
  std::vector<ScriptLine> lines;

  Timestamp duration_ms() const;
  const ScriptAgent* agent(const ParticipantId& id) const;
  const ScriptAgent& less_talkative() const;
};

/// Parses and validates a script document. Errors are SchemaError naming the
/// JSON line:column or the offending field path (e.g. `lines[4].speaker`).
MeetingScript parse_script(std::string_view text);
MeetingScript load_script(const std::string& path);

/// Canonical form: every line with explicit start and word timings.
nlohmann::json to_json(const MeetingScript& s);

/// Timings for `text` spoken from `start_ms` at `wpm`: each word gets a
/// 60000/wpm slot and ends at 80% of it.
std::vector<WordTiming> auto_word_timings(std::string_view text, Timestamp start_ms, int wpm);

/// Maps a three-agent script onto seven agents with the same timeline: the
/// Pro agent's lines rotate over MA1, MA4, MA7, the Against agent's over MA2,
/// MA5, MA6, and the LessTalkative agent becomes MA3.
MeetingScript redistribute_to_seven(const MeetingScript& three);

}  // namespace catchup
