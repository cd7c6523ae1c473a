#pragma once

#include "catchup/event_log.hpp"
#include "catchup/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace catchup {

using Interval = std::pair<Timestamp, Timestamp>;  // [first, second)

enum class GazeClass { Avatar, Interface, Other };

/// Avatar targets count as avatars; panels and the table transcript count
/// as the interface; objects and empty gaze count as neither.
GazeClass classify_gaze(const GazeTarget& t);

struct GazeSplit {
  Timestamp avatar_ms = 0;
  Timestamp interface_ms = 0;
  Timestamp other_ms = 0;
  Timestamp counted_ms = 0;  // trial length minus excluded time
  double pct_avatars = 0.0;
  double pct_interface = 0.0;
};

/// Each sample's target holds until the next sample (or `trial_end`); time
/// before the first sample is Other. Time inside `excluded` is not counted.
GazeSplit gaze_split(const std::vector<GazeSample>& samples, Timestamp trial_start,
                     Timestamp trial_end, const std::vector<Interval>& excluded = {});

/// Dropout-to-rejoin intervals of `user` in log order. An unmatched dropout
/// runs to the end of the log.
std::vector<Interval> absence_intervals(const EventLog& log, const ParticipantId& user);
std::vector<GazeSample> gaze_samples(const EventLog& log, const ParticipantId& user);

/// Gaze split over the whole log, dropout time excluded.
GazeSplit compute_gaze_split(const EventLog& log, const ParticipantId& user);

/// EngageSync: Rejoin to ModeChange(Engagement) following the first
/// ReEngagement after it, 0 when the window stayed empty. Baselines: Rejoin
/// to the CaughtUp mark. Unfinished catch-up is censored at the end of the
/// log. Throws NoRejoinFound.
Timestamp compute_reengagement_time(const EventLog& log, const ParticipantId& user);

/// Other speakers' finalized utterances ending inside a dropout interval.
std::vector<Utterance> missed_utterances(const EventLog& log, const ParticipantId& user);

double missed_utterance_coverage(const EventLog& log, const ParticipantId& user);

struct RecallRow {
  ParticipantId speaker;
  std::string role;
  std::size_t missed_utterances = 0;
  bool surfaced = false;
  bool less_talkative = false;
};

/// Per speaker with utterances in the `window`-th absence: whether their
/// missed content was shown and read. Throws ProtocolError for a window
/// index that does not exist.
std::vector<RecallRow> recall_window_report(const EventLog& log, const ParticipantId& user,
                                            std::size_t window = 0);

/// Time series (one row per gaze sample) of gaze target, visible panel count
/// and mode for plotting. Tab separated with a header row.
std::string plot_data_tsv(const EventLog& log, const ParticipantId& user);

}  // namespace catchup
