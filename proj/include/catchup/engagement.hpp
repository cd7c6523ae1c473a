#pragma once

#include "catchup/summarizer.hpp"
#include "catchup/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace catchup {

struct FsmConfig {
  Timestamp fade_after_ms = 2000;
  Timestamp read_after_gaze_ms = 1500;
  Timestamp lookback_grace_ms = 2000;
  Timestamp disengage_after_ms = 3000;
  int engagement_summary_words = kUtteranceSummaryWords;
  int reengagement_summary_words = kReEngagementSummaryWords;

  /// Throws BadConfig naming the first non-positive field.
  void validate() const;

  friend bool operator==(const FsmConfig&, const FsmConfig&) = default;
};

struct UserContext {
  enum class Kind { FocusedOnSpeaker, FocusedOnListener, Unfocused, Disengaged, ReEngaging };

  Kind kind = Kind::Unfocused;
  ParticipantId participant;  // FocusedOnSpeaker / FocusedOnListener only

  friend bool operator==(const UserContext&, const UserContext&) = default;
};

std::string_view to_string(UserContext::Kind k);

enum class PanelKind { Live, EngagementSummary, ReEngagementSummary };
enum class Indicator { NoCircle, GreenCircle, OrangeCircle };
enum class PanelState { Visible, Read, Hidden };

Indicator indicator_for(PanelKind kind);
std::string_view to_string(PanelKind k);
std::string_view to_string(Indicator i);
std::string_view to_string(PanelState s);
PanelKind parse_panel_kind(std::string_view s);
Indicator parse_indicator(std::string_view s);
PanelState parse_panel_state(std::string_view s);

struct Panel {
  std::string panel_id;
  ParticipantId owner;   // avatar it is anchored to
  ParticipantId viewer;  // user who sees it
  PanelKind kind = PanelKind::Live;
  Indicator indicator = Indicator::NoCircle;
  std::string text;
  Timestamp created_ms = 0;
  Timestamp last_gazed_ms = 0;
  Timestamp gaze_accum_ms = 0;  // contiguous dwell only
  PanelState state = PanelState::Visible;
  std::vector<std::string> source_ids;
  bool summary_pending = false;

  std::optional<Timestamp> dwell_start_ms;  // gaze currently on the owner since
  std::optional<Timestamp> left_ms;         // a Read panel lost gaze at
};

struct MissedWindow {
  ParticipantId user;
  Timestamp start_ms = 0;
  std::optional<Timestamp> end_ms;  // nullopt while open
  std::vector<std::string> utterance_ids;
};

/// Summaries generated when a window closed, one per speaker.
struct ReEngagementRecord {
  std::size_t window_index = 0;
  std::string panel_id;
  ParticipantId owner;
  std::vector<std::string> source_ids;
};

// Effects produced by the state machine, in the order they happened.
struct PanelShown { Panel panel; };
struct PanelUpdated { Panel panel; };
struct PanelHidden { Panel panel; };
struct ModeChanged { ParticipantId user; Mode mode; };
struct SummaryDelivered {
  std::string panel_id;
  ParticipantId viewer;
  SummaryKind kind;
  Summary summary;
};
struct Notice {
  ParticipantId user;
  std::string code;
  std::string message;
};

using FsmEffect =
    std::variant<PanelShown, PanelUpdated, PanelHidden, ModeChanged, SummaryDelivered, Notice>;
using FsmEffects = std::vector<FsmEffect>;

/// Read-only view of shared session state the state machine consults.
class MeetingView {
public:
  virtual ~MeetingView() = default;
  virtual bool is_member(const ParticipantId& p) const = 0;
  virtual bool is_present(const ParticipantId& p) const = 0;
  virtual std::set<ParticipantId> members() const = 0;
  virtual std::vector<ParticipantId> present_members() const = 0;
  virtual std::set<ParticipantId> speaking() const = 0;
  virtual std::optional<Utterance> last_utterance(const ParticipantId& p) const = 0;
  virtual std::string partial_text(const ParticipantId& p) const = 0;
  virtual std::optional<std::string> latest_summary_text(const ParticipantId& p) const = 0;
  /// True while some speaker other than `exclude` has an open utterance whose
  /// words so far end at or before `cutoff`; its final end time is unknown.
  virtual bool speech_unresolved_through(Timestamp cutoff, const ParticipantId& exclude) const = 0;
};

/// Where summary work goes. Returns the summary when it was produced inline;
/// nullopt means it will arrive later through UserEngagement::apply_summary.
class SummaryPort {
public:
  virtual ~SummaryPort() = default;
  virtual std::optional<Summary> dispatch(const std::string& panel_id, const ParticipantId& viewer,
                                          const SummaryRequest& request) = 0;
};

/// Pure classification of what the user is attending to.
///
/// Anchored gaze (avatar or its panel) on a speaking participant is
/// FocusedOnSpeaker, on anyone else FocusedOnListener. Gaze at nothing for at
/// least `disengage_after_ms` is Disengaged; shorter absences and gaze at the
/// table or other objects are Unfocused. Any non-empty gaze while in
/// ReEngagement mode is ReEngaging.
///
/// Throws UnknownTarget when the gaze is anchored to the user themself or to a
/// participant outside `members` (when given).
UserContext classify_context(const ParticipantId& user, const GazeSample& latest_gaze,
                             const std::set<ParticipantId>& speaking,
                             Timestamp elapsed_since_avatar_or_object_gaze_ms,
                             const FsmConfig& config, Mode mode,
                             const std::set<ParticipantId>* members = nullptr);

/// Engagement state of one viewer in one session. Single-threaded; every call
/// must come from the session's event loop in event order.
class UserEngagement {
public:
  using PanelIdSource = std::function<std::string()>;

  UserEngagement(ParticipantId user, InterfaceMode iface, FsmConfig config, const MeetingView& view,
                 SummaryPort& summaries, PanelIdSource next_panel_id);

  void on_join(Timestamp now, FsmEffects& fx);
  void on_gaze(const GazeSample& sample, FsmEffects& fx);
  void on_pinch(Timestamp now, FsmEffects& fx);
  /// Dropout / Rejoin of this user.
  void on_presence(PresenceKind kind, Timestamp now, FsmEffects& fx);
  /// Another participant connected or disconnected.
  void on_member_presence(const ParticipantId& other, bool present, Timestamp now, FsmEffects& fx);
  /// A finalized utterance from anyone in the session.
  void on_utterance(const Utterance& u, FsmEffects& fx);
  /// The running per-utterance summary of `speaker` changed.
  void on_utterance_summary(const ParticipantId& speaker, const std::string& text, FsmEffects& fx);
  /// Live caption text of `speaker`'s open utterance changed.
  void live_caption_update(const ParticipantId& speaker, const std::string& partial_text,
                           FsmEffects& fx);
  /// Timer evaluation at `now`: fades, read marking, look-back grace, window
  /// resolution and gaze-absence disengagement.
  void tick(Timestamp now, FsmEffects& fx);
  /// Completion of an asynchronously dispatched summary.
  void apply_summary(const std::string& panel_id, SummaryKind kind, const Summary& summary,
                     FsmEffects& fx);

  /// Opens a missed-content window at `now` and hides every visible panel.
  /// No-op when a window is already open.
  void on_disengage(Timestamp now, FsmEffects& fx);
  /// Closes the open window at `now` and shows one re-engagement summary per
  /// speaker in it. Throws ProtocolError when no window is open.
  void on_reengage(Timestamp now, FsmEffects& fx);
  /// Returns to Engagement once every re-engagement panel is read or hidden.
  bool check_all_read(Timestamp now, FsmEffects& fx);

  const ParticipantId& user() const noexcept { return user_; }
  InterfaceMode interface_mode() const noexcept { return iface_; }
  Mode mode() const noexcept { return mode_; }
  const UserContext& context() const noexcept { return context_; }
  bool present() const noexcept { return present_; }
  bool window_closing() const noexcept { return window_ && closing_; }
  const std::optional<MissedWindow>& current_window() const noexcept { return window_; }
  const std::vector<MissedWindow>& closed_windows() const noexcept { return closed_windows_; }
  const std::vector<ReEngagementRecord>& reengagement_records() const noexcept {
    return reengagement_records_;
  }
  std::vector<Panel> visible_panels() const;
  const Panel* panel_on(const ParticipantId& owner) const;
  bool avatar_summary_view() const noexcept { return avatar_summary_view_; }
  bool table_summary_view() const noexcept { return table_summary_view_; }

  std::uint64_t panels_shown() const noexcept { return panels_shown_; }
  std::uint64_t pinches() const noexcept { return pinches_; }
  std::uint64_t mode_changes() const noexcept { return mode_changes_; }

private:
  enum class WindowTrigger { Gaze, Dropout };

  std::optional<ParticipantId> focused_owner() const;
  void begin_reengage(Timestamp now, FsmEffects& fx);
  void refresh_context(Timestamp now);
  void set_mode(Mode m, FsmEffects& fx);
  Panel& show_panel(const ParticipantId& owner, PanelKind kind, std::string text, Timestamp now,
                    FsmEffects& fx);
  void show_summary_panel(const ParticipantId& owner, PanelKind kind, SummaryRequest request,
                          Timestamp now, FsmEffects& fx, std::optional<std::size_t> window_index);
  void hide_panel(const ParticipantId& owner, FsmEffects& fx);
  void hide_all_panels(FsmEffects& fx);
  void rebuild_avatar_panels(Timestamp now, FsmEffects& fx);
  PanelKind avatar_panel_kind() const;
  std::string avatar_panel_text(const ParticipantId& owner) const;

  ParticipantId user_;
  InterfaceMode iface_;
  FsmConfig config_;
  const MeetingView& view_;
  SummaryPort& summaries_;
  PanelIdSource next_panel_id_;

  Mode mode_ = Mode::Engagement;
  UserContext context_;
  bool present_ = true;
  std::optional<GazeSample> latest_gaze_;
  std::optional<Timestamp> none_since_;

  std::map<ParticipantId, Panel> panels_;  // visible panels keyed by owner

  std::optional<MissedWindow> window_;
  bool closing_ = false;
  WindowTrigger trigger_ = WindowTrigger::Gaze;
  std::vector<Utterance> window_utterances_;
  std::vector<MissedWindow> closed_windows_;
  std::vector<ReEngagementRecord> reengagement_records_;

  bool avatar_summary_view_ = false;
  bool table_summary_view_ = false;

  std::uint64_t panels_shown_ = 0;
  std::uint64_t pinches_ = 0;
  std::uint64_t mode_changes_ = 0;
};

}  // namespace catchup
