#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace catchup {

/// Milliseconds since session start.
using Timestamp = std::int64_t;

/// Opaque participant token. Display names and colors are roster metadata.
class ParticipantId {
public:
  ParticipantId() = default;
  explicit ParticipantId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const ParticipantId&, const ParticipantId&) = default;
  friend bool operator==(const ParticipantId&, const ParticipantId&) = default;

private:
  std::string value_;
};

struct Utterance {
  std::string utterance_id;
  ParticipantId speaker;
  std::string text;
  Timestamp start_ms = 0;
  Timestamp end_ms = 0;
  std::uint64_t seq = 0;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// What a gaze sample hits. `Panel` is the text surface anchored above an
/// avatar and `Table` is the table-fixed transcript; both count as looking at
/// the interface rather than at a person.
struct GazeTarget {
  enum class Kind { None, Avatar, Panel, Table, Object };

  Kind kind = Kind::None;
  ParticipantId participant;  // set for Avatar and Panel

  static GazeTarget none() { return {}; }
  static GazeTarget avatar(ParticipantId p) { return {Kind::Avatar, std::move(p)}; }
  static GazeTarget panel(ParticipantId p) { return {Kind::Panel, std::move(p)}; }
  static GazeTarget table() { return {Kind::Table, {}}; }
  static GazeTarget object() { return {Kind::Object, {}}; }

  bool is_none() const noexcept { return kind == Kind::None; }
  bool anchored() const noexcept { return kind == Kind::Avatar || kind == Kind::Panel; }

  /// The avatar this target is anchored to, if any.
  std::optional<ParticipantId> anchor() const {
    if (anchored()) return participant;
    return std::nullopt;
  }

  friend bool operator==(const GazeTarget&, const GazeTarget&) = default;
};

struct GazeSample {
  ParticipantId user;
  GazeTarget target;
  Timestamp t_ms = 0;

  friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

struct PinchEvent {
  ParticipantId user;
  Timestamp t_ms = 0;

  friend bool operator==(const PinchEvent&, const PinchEvent&) = default;
};

enum class PresenceKind { Join, Dropout, Rejoin };

struct PresenceEvent {
  ParticipantId user;
  PresenceKind kind = PresenceKind::Join;
  Timestamp t_ms = 0;
  // Join only.
  std::string display_name;
  std::string color;
  bool agent = false;

  friend bool operator==(const PresenceEvent&, const PresenceEvent&) = default;
};

struct TimedToken {
  ParticipantId speaker;
  std::string word;
  Timestamp onset_ms = 0;
  Timestamp offset_ms = 0;

  friend bool operator==(const TimedToken&, const TimedToken&) = default;
};

/// Tokens delivered together by one speaker's recognizer. `final` closes the
/// speaker's open utterance after the batch is applied.
struct TokenBatch {
  ParticipantId speaker;
  std::vector<TimedToken> tokens;
  bool final = false;
  Timestamp t_ms = 0;

  friend bool operator==(const TokenBatch&, const TokenBatch&) = default;
};

enum class InterfaceMode { TableTI, AvatarTI, EngageSync };

enum class Mode { Engagement, ReEngagement };

/// Inbound session event. Alternative order doubles as the tie-break rank for
/// events at equal timestamps.
using SessionEvent = std::variant<PresenceEvent, GazeSample, PinchEvent, TokenBatch>;

Timestamp event_time(const SessionEvent& e);
const ParticipantId& event_sender(const SessionEvent& e);
int event_rank(const SessionEvent& e);

/// An event tagged with its source sequence number for deterministic ordering.
struct OrderedEvent {
  SessionEvent event;
  std::uint64_t source_seq = 0;
};

/// Total order: (t_ms, Presence < Gaze < Pinch < Utterance, source_seq).
bool event_before(const OrderedEvent& a, const OrderedEvent& b);

std::string_view to_string(InterfaceMode m);
std::string_view to_string(Mode m);
std::string_view to_string(PresenceKind k);
std::string_view to_string(GazeTarget::Kind k);

InterfaceMode parse_interface_mode(std::string_view s);
PresenceKind parse_presence_kind(std::string_view s);
GazeTarget::Kind parse_gaze_kind(std::string_view s);

}  // namespace catchup
