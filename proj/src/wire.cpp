#include "catchup/wire.hpp"

#include "catchup/error.hpp"

#include <array>
#include <utility>

namespace catchup {

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 14> kTypeNames = {{
    {MessageType::Hello, "Hello"},
    {MessageType::Welcome, "Welcome"},
    {MessageType::PresenceEvent, "PresenceEvent"},
    {MessageType::TimedTokenBatch, "TimedTokenBatch"},
    {MessageType::UtteranceFinal, "UtteranceFinal"},
    {MessageType::GazeUpdate, "GazeUpdate"},
    {MessageType::Pinch, "Pinch"},
    {MessageType::PanelShow, "PanelShow"},
    {MessageType::PanelUpdate, "PanelUpdate"},
    {MessageType::PanelHide, "PanelHide"},
    {MessageType::ModeChange, "ModeChange"},
    {MessageType::SummaryReady, "SummaryReady"},
    {MessageType::MetricsSnapshot, "MetricsSnapshot"},
    {MessageType::Error, "Error"},
}};

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedPayload, what);
}

const Json& field(const Json& j, const char* name, std::string_view ctx) {
  if (!j.is_object()) malformed(std::string(ctx) + ": expected an object");
  auto it = j.find(name);
  if (it == j.end()) malformed(std::string(ctx) + "." + name + ": missing");
  return *it;
}

std::string str_field(const Json& j, const char* name, std::string_view ctx) {
  const Json& v = field(j, name, ctx);
  if (!v.is_string()) malformed(std::string(ctx) + "." + name + ": expected a string");
  return v.get<std::string>();
}

std::int64_t int_field(const Json& j, const char* name, std::string_view ctx) {
  const Json& v = field(j, name, ctx);
  if (!v.is_number_integer()) malformed(std::string(ctx) + "." + name + ": expected an integer");
  return v.get<std::int64_t>();
}

bool bool_field_or(const Json& j, const char* name, bool fallback, std::string_view ctx) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) malformed(std::string(ctx) + "." + name + ": expected a boolean");
  return it->get<bool>();
}

std::string str_field_or(const Json& j, const char* name, std::string fallback,
                         std::string_view ctx) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) malformed(std::string(ctx) + "." + name + ": expected a string");
  return it->get<std::string>();
}

Timestamp time_or(const Json& j, Timestamp fallback) {
  auto it = j.find("t_ms");
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) malformed("t_ms: expected an integer");
  return it->get<Timestamp>();
}

Json inbound_envelope(MessageType type, Timestamp t, Json payload) {
  return Json{{"type", to_string(type)}, {"t_ms", t}, {"payload", std::move(payload)}};
}

}  // namespace

std::string_view to_string(MessageType t) {
  for (const auto& [type, name] : kTypeNames) {
    if (type == t) return name;
  }
  return "?";
}

MessageType parse_message_type(std::string_view s) {
  for (const auto& [type, name] : kTypeNames) {
    if (name == s) return type;
  }
  malformed("unknown message type '" + std::string(s) + "'");
}

Json to_json(const WireMessage& m) {
  return Json{{"type", to_string(m.type)},
              {"seq", m.seq},
              {"t_ms", m.t_ms},
              {"to", m.to ? Json(m.to->str()) : Json(nullptr)},
              {"payload", m.payload}};
}

WireMessage wire_message_from_json(const Json& j) {
  WireMessage m;
  m.type = parse_message_type(str_field(j, "type", "message"));
  m.seq = static_cast<std::uint64_t>(int_field(j, "seq", "message"));
  m.t_ms = int_field(j, "t_ms", "message");
  const Json& to = field(j, "to", "message");
  if (!to.is_null()) m.to = ParticipantId(to.get<std::string>());
  m.payload = field(j, "payload", "message");
  return m;
}

std::string encode_line(const WireMessage& m) { return to_json(m).dump(); }

Json to_json(const GazeTarget& t) {
  Json j{{"kind", to_string(t.kind)}};
  if (t.anchored()) j["id"] = t.participant.str();
  return j;
}

GazeTarget gaze_target_from_json(const Json& j) {
  GazeTarget t;
  t.kind = parse_gaze_kind(str_field(j, "kind", "target"));
  if (t.anchored()) {
    t.participant = ParticipantId(str_field(j, "id", "target"));
    if (t.participant.empty()) malformed("target.id: empty");
  }
  return t;
}

Json to_json(const SessionEvent& e) {
  struct Visitor {
    Json operator()(const PresenceEvent& ev) const {
      Json p{{"user", ev.user.str()}, {"kind", to_string(ev.kind)}};
      if (ev.kind == PresenceKind::Join) {
        p["display_name"] = ev.display_name;
        p["color"] = ev.color;
        p["agent"] = ev.agent;
      }
      return inbound_envelope(MessageType::PresenceEvent, ev.t_ms, std::move(p));
    }
    Json operator()(const GazeSample& ev) const {
      return inbound_envelope(MessageType::GazeUpdate, ev.t_ms,
                              Json{{"user", ev.user.str()}, {"target", to_json(ev.target)}});
    }
    Json operator()(const PinchEvent& ev) const {
      return inbound_envelope(MessageType::Pinch, ev.t_ms, Json{{"user", ev.user.str()}});
    }
    Json operator()(const TokenBatch& ev) const {
      Json tokens = Json::array();
      for (const auto& t : ev.tokens) {
        tokens.push_back(
            Json{{"word", t.word}, {"onset_ms", t.onset_ms}, {"offset_ms", t.offset_ms}});
      }
      return inbound_envelope(
          MessageType::TimedTokenBatch, ev.t_ms,
          Json{{"speaker", ev.speaker.str()}, {"final", ev.final}, {"tokens", std::move(tokens)}});
    }
  };
  return std::visit(Visitor{}, e);
}

Json to_json(const InboundMessage& m) {
  struct Visitor {
    Json operator()(const Hello& h) const {
      Json p{{"protocol_version", h.protocol_version},
             {"name", h.name},
             {"color", h.color},
             {"agent", h.agent},
             {"resume_id", h.resume_id ? Json(*h.resume_id) : Json(nullptr)}};
      return Json{{"type", "Hello"}, {"payload", std::move(p)}};
    }
    Json operator()(const SessionEvent& e) const { return to_json(e); }
    Json operator()(const MetricsRequest& r) const {
      return Json{{"type", "MetricsSnapshot"}, {"payload", Json{{"user", r.user.str()}}}};
    }
  };
  return std::visit(Visitor{}, m);
}

InboundMessage inbound_from_json(const Json& j) {
  const MessageType type = parse_message_type(str_field(j, "type", "message"));
  const Json& p = field(j, "payload", "message");
  if (!p.is_object()) malformed("payload: expected an object");
  const Timestamp t = time_or(j, 0);

  switch (type) {
    case MessageType::Hello: {
      Hello h;
      h.protocol_version = static_cast<int>(int_field(p, "protocol_version", "Hello"));
      h.name = str_field(p, "name", "Hello");
      h.color = str_field_or(p, "color", "", "Hello");
      h.agent = bool_field_or(p, "agent", false, "Hello");
      if (auto it = p.find("resume_id"); it != p.end() && !it->is_null()) {
        h.resume_id = it->get<std::string>();
      }
      return h;
    }
    case MessageType::PresenceEvent: {
      PresenceEvent ev;
      ev.user = ParticipantId(str_field(p, "user", "PresenceEvent"));
      ev.kind = parse_presence_kind(str_field(p, "kind", "PresenceEvent"));
      ev.t_ms = t;
      ev.display_name = str_field_or(p, "display_name", ev.user.str(), "PresenceEvent");
      ev.color = str_field_or(p, "color", "", "PresenceEvent");
      ev.agent = bool_field_or(p, "agent", false, "PresenceEvent");
      return SessionEvent{ev};
    }
    case MessageType::GazeUpdate: {
      GazeSample ev;
      ev.user = ParticipantId(str_field(p, "user", "GazeUpdate"));
      ev.target = gaze_target_from_json(field(p, "target", "GazeUpdate"));
      ev.t_ms = t;
      return SessionEvent{ev};
    }
    case MessageType::Pinch: {
      PinchEvent ev;
      ev.user = ParticipantId(str_field(p, "user", "Pinch"));
      ev.t_ms = t;
      return SessionEvent{ev};
    }
    case MessageType::TimedTokenBatch: {
      TokenBatch ev;
      ev.speaker = ParticipantId(str_field(p, "speaker", "TimedTokenBatch"));
      ev.final = bool_field_or(p, "final", false, "TimedTokenBatch");
      ev.t_ms = t;
      const Json& tokens = field(p, "tokens", "TimedTokenBatch");
      if (!tokens.is_array()) malformed("TimedTokenBatch.tokens: expected an array");
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string ctx = "TimedTokenBatch.tokens[" + std::to_string(i) + "]";
        TimedToken tok;
        tok.speaker = ev.speaker;
        tok.word = str_field(tokens[i], "word", ctx);
        tok.onset_ms = int_field(tokens[i], "onset_ms", ctx);
        tok.offset_ms = int_field(tokens[i], "offset_ms", ctx);
        ev.tokens.push_back(std::move(tok));
      }
      return SessionEvent{ev};
    }
    case MessageType::MetricsSnapshot:
      return MetricsRequest{ParticipantId(str_field_or(p, "user", "", "MetricsSnapshot"))};
    default:
      malformed("message type " + std::string(to_string(type)) + " is not accepted from clients");
  }
}

InboundMessage decode_inbound_line(std::string_view line) {
  Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded()) malformed("line is not valid JSON");
  try {
    return inbound_from_json(j);
  } catch (const Json::exception& e) {
    malformed(std::string("wrong field type: ") + e.what());
  }
}

Json to_json(const Utterance& u) {
  return Json{{"utterance_id", u.utterance_id}, {"speaker", u.speaker.str()}, {"text", u.text},
              {"start_ms", u.start_ms},         {"end_ms", u.end_ms},         {"seq", u.seq}};
}

Utterance utterance_from_json(const Json& j) {
  Utterance u;
  u.utterance_id = str_field(j, "utterance_id", "utterance");
  u.speaker = ParticipantId(str_field(j, "speaker", "utterance"));
  u.text = str_field(j, "text", "utterance");
  u.start_ms = int_field(j, "start_ms", "utterance");
  u.end_ms = int_field(j, "end_ms", "utterance");
  u.seq = static_cast<std::uint64_t>(int_field(j, "seq", "utterance"));
  return u;
}

Json to_json(const Summary& s) {
  return Json{{"text", s.text},
              {"word_count", s.word_count},
              {"source_ids", s.source_ids},
              {"latency_ms", s.latency_ms},
              {"degraded", s.degraded}};
}

Summary summary_from_json(const Json& j) {
  Summary s;
  s.text = str_field(j, "text", "summary");
  s.word_count = static_cast<int>(int_field(j, "word_count", "summary"));
  const Json& ids = field(j, "source_ids", "summary");
  if (!ids.is_array()) malformed("summary.source_ids: expected an array");
  for (const auto& id : ids) s.source_ids.push_back(id.get<std::string>());
  s.latency_ms = int_field(j, "latency_ms", "summary");
  s.degraded = bool_field_or(j, "degraded", false, "summary");
  return s;
}

Json to_json(const Panel& p, std::string_view owner_color) {
  return Json{{"panel_id", p.panel_id},
              {"owner", p.owner.str()},
              {"viewer", p.viewer.str()},
              {"kind", to_string(p.kind)},
              {"indicator", to_string(p.indicator)},
              {"text", p.text},
              {"state", to_string(p.state)},
              {"color", owner_color},
              {"created_ms", p.created_ms},
              {"summary_pending", p.summary_pending}};
}

Json to_json(const FsmConfig& c) {
  return Json{{"fade_after_ms", c.fade_after_ms},
              {"read_after_gaze_ms", c.read_after_gaze_ms},
              {"lookback_grace_ms", c.lookback_grace_ms},
              {"disengage_after_ms", c.disengage_after_ms},
              {"engagement_summary_words", c.engagement_summary_words},
              {"reengagement_summary_words", c.reengagement_summary_words}};
}

FsmConfig fsm_config_from_json(const Json& j, FsmConfig base) {
  auto read = [&](const char* name, auto& slot) {
    auto it = j.find(name);
    if (it == j.end()) return;
    if (!it->is_number_integer()) {
      throw Error(ErrorCode::BadConfig, std::string(name) + " must be an integer");
    }
    slot = it->get<std::remove_reference_t<decltype(slot)>>();
  };
  read("fade_after_ms", base.fade_after_ms);
  read("read_after_gaze_ms", base.read_after_gaze_ms);
  read("lookback_grace_ms", base.lookback_grace_ms);
  read("disengage_after_ms", base.disengage_after_ms);
  read("engagement_summary_words", base.engagement_summary_words);
  read("reengagement_summary_words", base.reengagement_summary_words);
  return base;
}

Json to_json(const StageStats& s) {
  Json j{{"count", s.count}};
  if (s.mean) {
    j["mean"] = *s.mean;
    j["sd"] = s.stddev;
    j["min"] = s.min;
    j["max"] = s.max;
  } else {
    j["mean"] = nullptr;
  }
  return j;
}

}  // namespace catchup
