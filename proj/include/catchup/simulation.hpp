#pragma once

#include "catchup/event_log.hpp"
#include "catchup/report.hpp"
#include "catchup/script.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace catchup {

struct DropoutSchedule {
  ParticipantId user{"U1"};
  Timestamp dropout_at_ms = 180000;
  Timestamp rejoin_at_ms = 420000;

  /// Throws ScheduleOutOfRange unless 0 <= dropout < rejoin <= script_end.
  void validate(Timestamp script_end_ms) const;
};

enum class GazePolicyKind { FollowSpeaker, RoundRobin, ScriptedTrace };

std::string_view to_string(GazePolicyKind k);
GazePolicyKind parse_gaze_policy(std::string_view s);

struct GazePolicy {
  GazePolicyKind kind = GazePolicyKind::FollowSpeaker;
  Timestamp sample_period_ms = 100;
  Timestamp round_robin_dwell_ms = 3000;
  std::vector<GazeSample> trace;  // ScriptedTrace only, sorted by time
};

inline constexpr int kDefaultReadingWpm = 300;
inline constexpr Timestamp kRunTailMs = 5000;
inline constexpr Timestamp kCatchUpCapMs = 120000;

struct SimulationOptions {
  InterfaceMode mode = InterfaceMode::EngageSync;
  DropoutSchedule schedule;
  GazePolicy policy;
  FsmConfig fsm;
  Timestamp pause_threshold_ms = kDefaultPauseThresholdMs;
  std::uint64_t seed = 1;
  int reading_wpm = kDefaultReadingWpm;
  std::string script_name;  // recorded in the log header
};

struct SimulationResult {
  EventLog log;
  RunReport report;
};

/// Plays the script into an in-process session on a virtual clock with one
/// simulated subject. Agents join at t=0, then the subject. Every word is
/// delivered at its offset time. The subject gazes per policy, is absent
/// during the dropout schedule, and after rejoining catches up: in
/// EngageSync it reads the orange panels in order of their earliest missed
/// utterance; in the baselines it reads for missed_words / reading_wpm and
/// then records a CaughtUp mark.
SimulationResult run_simulation(const MeetingScript& script, const SimulationOptions& options);

/// Milliseconds a reader at `wpm` needs for `words` words, rounded up.
Timestamp reading_time_ms(std::size_t words, int wpm);

}  // namespace catchup
