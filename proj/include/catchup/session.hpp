#pragma once

#include "catchup/clock.hpp"
#include "catchup/error.hpp"
#include "catchup/engagement.hpp"
#include "catchup/latency.hpp"
#include "catchup/segmenter.hpp"
#include "catchup/summarizer.hpp"
#include "catchup/wire.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace catchup {

struct SessionConfig {
  std::string session_id = "session";
  InterfaceMode interface_mode = InterfaceMode::EngageSync;
  FsmConfig fsm;
  Timestamp pause_threshold_ms = kDefaultPauseThresholdMs;

  void validate() const;
  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

Json to_json(const SessionConfig& c);
SessionConfig session_config_from_json(const Json& j);

/// Runs summary jobs for a session. Inline dispatchers return the summary
/// immediately; deferred ones return nullopt and the host later feeds the
/// result to Session::complete_summary().
class SummaryDispatcher {
public:
  virtual ~SummaryDispatcher() = default;
  virtual std::optional<Summary> dispatch(std::uint64_t job_id, const SummaryRequest& request) = 0;
};

/// Executes jobs synchronously on the caller's thread, falling back to the
/// extractive path when the backend is unavailable.
class InlineDispatcher final : public SummaryDispatcher {
public:
  InlineDispatcher(SummarizerBackend& backend, const ClockSource& clock)
      : backend_(backend), clock_(clock) {}
  std::optional<Summary> dispatch(std::uint64_t job_id, const SummaryRequest& request) override;

private:
  SummarizerBackend& backend_;
  const ClockSource& clock_;
};

/// Never completes jobs itself; used when completions come from elsewhere
/// (a worker pool, or a recorded log during replay).
class DeferredDispatcher final : public SummaryDispatcher {
public:
  struct Job {
    std::uint64_t id;
    SummaryRequest request;
  };
  std::optional<Summary> dispatch(std::uint64_t job_id, const SummaryRequest& request) override {
    pending.push_back({job_id, request});
    return std::nullopt;
  }
  std::vector<Job> pending;
};

struct ParticipantInfo {
  std::string display_name;
  std::string color;
  bool connected = false;
  bool agent = false;
};

struct UserCounters {
  std::uint64_t panels_shown = 0;
  std::uint64_t pinches = 0;
  std::uint64_t mode_changes = 0;
};

struct MetricsSnapshot {
  std::map<LatencyStage, StageStats> latency;
  std::map<ParticipantId, UserCounters> users;
  std::uint64_t utterances = 0;
  std::uint64_t summaries_dispatched = 0;
  std::uint64_t summaries_ready = 0;
};

Json to_json(const MetricsSnapshot& m);

struct PanelEntry {
  ParticipantId owner;
  std::string color;
  Panel panel;
};

/// The host-side text session: one ordered stream of inbound events applied
/// to shared transcript state and per-viewer engagement machines.
///
/// Every mutating call returns the messages it produced, already stamped with
/// consecutive outbound sequence numbers. Rejected events produce a single
/// Error message and leave state untouched. Not thread-safe: drive it from one
/// event loop.
class Session final : public MeetingView, private SummaryPort {
public:
  Session(SessionConfig config, const ClockSource& clock, SummaryDispatcher& dispatcher);
  ~Session() override;

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Registers a client. `assigned` receives the participant id (the name,
  /// suffixed on collision, or the resumed id).
  std::vector<WireMessage> hello(const Hello& hello, ParticipantId* assigned = nullptr);

  /// Applies one event at the clock's current time.
  std::vector<WireMessage> ingest(const SessionEvent& event);

  /// Runs timers at the clock's current time: pause-based utterance closing,
  /// then every viewer's tick.
  std::vector<WireMessage> advance();

  /// Delivers the result of a deferred summary job.
  std::vector<WireMessage> complete_summary(std::uint64_t job_id, const Summary& summary);

  std::vector<WireMessage> metrics_message(const std::optional<ParticipantId>& to);

  std::vector<PanelEntry> match_panels(const ParticipantId& viewer) const;
  MetricsSnapshot snapshot_metrics() const;

  const SessionConfig& config() const noexcept { return config_; }
  const std::vector<Utterance>& transcript() const noexcept { return transcript_; }
  const std::map<ParticipantId, ParticipantInfo>& participants() const noexcept {
    return participants_;
  }
  const UserEngagement* engagement(const ParticipantId& user) const;
  std::uint64_t pending_jobs() const noexcept { return jobs_.size(); }
  Timestamp now() const { return clock_.now(); }

  // MeetingView
  bool is_member(const ParticipantId& p) const override;
  bool is_present(const ParticipantId& p) const override;
  std::set<ParticipantId> members() const override;
  std::vector<ParticipantId> present_members() const override;
  std::set<ParticipantId> speaking() const override;
  std::optional<Utterance> last_utterance(const ParticipantId& p) const override;
  std::string partial_text(const ParticipantId& p) const override;
  std::optional<std::string> latest_summary_text(const ParticipantId& p) const override;
  bool speech_unresolved_through(Timestamp cutoff, const ParticipantId& exclude) const override;

private:
  struct Job {
    SummaryKind kind;
    std::optional<std::string> panel_id;
    std::optional<ParticipantId> viewer;
    std::optional<Utterance> utterance;  // per-utterance summaries
  };

  // SummaryPort
  std::optional<Summary> dispatch(const std::string& panel_id, const ParticipantId& viewer,
                                  const SummaryRequest& request) override;

  void validate(const SessionEvent& event) const;
  void apply(const PresenceEvent& ev, Timestamp now);
  void apply(const GazeSample& ev, Timestamp now);
  void apply(const PinchEvent& ev, Timestamp now);
  void apply(const TokenBatch& ev, Timestamp now);
  void register_participant(const ParticipantId& id, std::string display_name, std::string color,
                            bool agent, Timestamp now);
  void finalize(UtteranceDraft&& draft, Timestamp now);
  void deliver_utterance_summary(const Utterance& u, const Summary& s, Timestamp now);
  void drain(FsmEffects& fx, Timestamp now);
  void emit(MessageType type, std::optional<ParticipantId> to, Json payload, Timestamp now);
  std::string color_of(const ParticipantId& p) const;
  UtteranceSegmenter& segmenter_for(const ParticipantId& speaker);
  std::vector<WireMessage> take_outbox();
  std::vector<WireMessage> error_message(const Error& e, const std::optional<ParticipantId>& to);

  SessionConfig config_;
  const ClockSource& clock_;
  SummaryDispatcher& dispatcher_;

  std::map<ParticipantId, ParticipantInfo> participants_;
  std::map<ParticipantId, std::unique_ptr<UserEngagement>> fsms_;
  std::map<ParticipantId, UtteranceSegmenter> segmenters_;
  std::map<ParticipantId, std::size_t> last_utterance_;  // index into transcript_
  std::map<ParticipantId, std::string> latest_summary_;
  std::vector<Utterance> transcript_;
  std::map<std::uint64_t, Job> jobs_;

  LatencyRegistry latency_;
  std::uint64_t next_job_ = 1;
  std::uint64_t next_panel_ = 1;
  std::uint64_t next_seq_ = 1;
  std::uint64_t summaries_dispatched_ = 0;
  std::uint64_t summaries_ready_ = 0;
  std::optional<Timestamp> last_advance_;
  std::vector<WireMessage> outbox_;
};

}  // namespace catchup
