#pragma once

#include "catchup/engagement.hpp"
#include "catchup/latency.hpp"
#include "catchup/summarizer.hpp"
#include "catchup/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace catchup {

using Json = nlohmann::json;

inline constexpr int kProtocolVersion = 1;

enum class MessageType {
  Hello,
  Welcome,
  PresenceEvent,
  TimedTokenBatch,
  UtteranceFinal,
  GazeUpdate,
  Pinch,
  PanelShow,
  PanelUpdate,
  PanelHide,
  ModeChange,
  SummaryReady,
  MetricsSnapshot,
  Error,
};

std::string_view to_string(MessageType t);
MessageType parse_message_type(std::string_view s);

/// One server-to-client record. `to` empty means broadcast to every client.
struct WireMessage {
  MessageType type = MessageType::Error;
  std::uint64_t seq = 0;
  Timestamp t_ms = 0;
  std::optional<ParticipantId> to;
  Json payload = Json::object();

  bool addressed_to(const ParticipantId& p) const { return !to || *to == p; }
  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

Json to_json(const WireMessage& m);
WireMessage wire_message_from_json(const Json& j);
/// Single-line encoding, without the trailing newline.
std::string encode_line(const WireMessage& m);

struct Hello {
  int protocol_version = kProtocolVersion;
  std::string name;
  std::string color;
  bool agent = false;
  std::optional<std::string> resume_id;  // reconnect as this participant
};

struct MetricsRequest {
  ParticipantId user;
};

/// Anything a client may send.
using InboundMessage = std::variant<Hello, SessionEvent, MetricsRequest>;

Json to_json(const InboundMessage& m);
Json to_json(const SessionEvent& e);
/// Throws MalformedPayload with a field-level description.
InboundMessage inbound_from_json(const Json& j);
InboundMessage decode_inbound_line(std::string_view line);

// Domain records.
Json to_json(const GazeTarget& t);
GazeTarget gaze_target_from_json(const Json& j);
Json to_json(const Utterance& u);
Utterance utterance_from_json(const Json& j);
Json to_json(const Summary& s);
Summary summary_from_json(const Json& j);
Json to_json(const Panel& p, std::string_view owner_color);
Json to_json(const FsmConfig& c);
FsmConfig fsm_config_from_json(const Json& j, FsmConfig base = {});
Json to_json(const StageStats& s);

}  // namespace catchup
