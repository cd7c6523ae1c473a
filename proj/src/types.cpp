#include "catchup/types.hpp"

#include "catchup/error.hpp"

#include <tuple>

namespace catchup {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsortedTokens: return "UnsortedTokens";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::UnknownParticipant: return "UnknownParticipant";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ScheduleOutOfRange: return "ScheduleOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::NoRejoinFound: return "NoRejoinFound";
    case ErrorCode::ClockError: return "ClockError";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Timestamp event_time(const SessionEvent& e) {
  return std::visit([](const auto& ev) { return ev.t_ms; }, e);
}

const ParticipantId& event_sender(const SessionEvent& e) {
  struct Visitor {
    const ParticipantId& operator()(const PresenceEvent& ev) const { return ev.user; }
    const ParticipantId& operator()(const GazeSample& ev) const { return ev.user; }
    const ParticipantId& operator()(const PinchEvent& ev) const { return ev.user; }
    const ParticipantId& operator()(const TokenBatch& ev) const { return ev.speaker; }
  };
  return std::visit(Visitor{}, e);
}

int event_rank(const SessionEvent& e) { return static_cast<int>(e.index()); }

bool event_before(const OrderedEvent& a, const OrderedEvent& b) {
  return std::tuple(event_time(a.event), event_rank(a.event), a.source_seq) <
         std::tuple(event_time(b.event), event_rank(b.event), b.source_seq);
}

std::string_view to_string(InterfaceMode m) {
  switch (m) {
    case InterfaceMode::TableTI: return "TableTI";
    case InterfaceMode::AvatarTI: return "AvatarTI";
    case InterfaceMode::EngageSync: return "EngageSync";
  }
  return "?";
}

std::string_view to_string(Mode m) {
  return m == Mode::Engagement ? "Engagement" : "ReEngagement";
}

std::string_view to_string(PresenceKind k) {
  switch (k) {
    case PresenceKind::Join: return "Join";
    case PresenceKind::Dropout: return "Dropout";
    case PresenceKind::Rejoin: return "Rejoin";
  }
  return "?";
}

std::string_view to_string(GazeTarget::Kind k) {
  switch (k) {
    case GazeTarget::Kind::None: return "none";
    case GazeTarget::Kind::Avatar: return "avatar";
    case GazeTarget::Kind::Panel: return "panel";
    case GazeTarget::Kind::Table: return "table";
    case GazeTarget::Kind::Object: return "object";
  }
  return "?";
}

InterfaceMode parse_interface_mode(std::string_view s) {
  if (s == "table" || s == "TableTI") return InterfaceMode::TableTI;
  if (s == "avatar" || s == "AvatarTI") return InterfaceMode::AvatarTI;
  if (s == "engagesync" || s == "EngageSync") return InterfaceMode::EngageSync;
  throw Error(ErrorCode::BadConfig, "mode: expected table, avatar or engagesync, got '" +
                                        std::string(s) + "'");
}

PresenceKind parse_presence_kind(std::string_view s) {
  if (s == "Join") return PresenceKind::Join;
  if (s == "Dropout") return PresenceKind::Dropout;
  if (s == "Rejoin") return PresenceKind::Rejoin;
  throw Error(ErrorCode::MalformedPayload, "unknown presence kind '" + std::string(s) + "'");
}

GazeTarget::Kind parse_gaze_kind(std::string_view s) {
  if (s == "none") return GazeTarget::Kind::None;
  if (s == "avatar") return GazeTarget::Kind::Avatar;
  if (s == "panel") return GazeTarget::Kind::Panel;
  if (s == "table") return GazeTarget::Kind::Table;
  if (s == "object") return GazeTarget::Kind::Object;
  throw Error(ErrorCode::MalformedPayload, "unknown gaze target kind '" + std::string(s) + "'");
}

}  // namespace catchup
