#pragma once

#include "catchup/event_log.hpp"
#include "catchup/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace catchup {

struct RunReport {
  InterfaceMode interface_mode = InterfaceMode::EngageSync;
  std::size_t group_size = 0;  // participants other than the subject
  ParticipantId subject;
  std::optional<Timestamp> reengagement_time_ms;  // nullopt without a rejoin
  std::string reengagement_measure;
  double gaze_pct_avatars = 0.0;
  double gaze_pct_interface = 0.0;
  std::uint64_t interaction_count = 0;  // pinches by the subject
  double missed_utterance_coverage = 0.0;
  std::size_t missed_utterances = 0;
  std::size_t speakers_in_window = 0;
  std::size_t orange_panels = 0;
  std::vector<RecallRow> recall;
  Json latency = Json::object();  // per-stage stats from the final metrics snapshot
  Json run = nullptr;
};

/// Everything is recomputed from the log, so a replayed log yields the same
/// report. `subject` defaults to the run's subject, then to the first human
/// participant who dropped out.
RunReport compute_report(const EventLog& log, std::optional<ParticipantId> subject = std::nullopt);

Json to_json(const RunReport& r);
/// Pretty JSON with a trailing newline; the on-disk form.
std::string report_json_text(const RunReport& r);
std::string format_report_table(const RunReport& r);

}  // namespace catchup
