#include "catchup/error.hpp"
#include "catchup/wire.hpp"

#include <gtest/gtest.h>

using namespace catchup;

namespace {

ErrorCode decode_error(std::string_view line) {
  try {
    decode_inbound_line(line);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST(Wire, MessageTypeNamesRoundTrip) {
  for (int i = 0; i <= static_cast<int>(MessageType::Error); ++i) {
    const auto t = static_cast<MessageType>(i);
    EXPECT_EQ(parse_message_type(to_string(t)), t);
  }
  EXPECT_THROW(parse_message_type("Nope"), Error);
}

TEST(Wire, WireMessageRoundTrip) {
  WireMessage m;
  m.type = MessageType::PanelShow;
  m.seq = 42;
  m.t_ms = 1234;
  m.to = ParticipantId("U1");
  m.payload = Json{{"panel", Json{{"panel_id", "p1"}}}};
  const std::string line = encode_line(m);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(wire_message_from_json(Json::parse(line)), m);

  m.to.reset();
  EXPECT_EQ(wire_message_from_json(to_json(m)), m);
  EXPECT_TRUE(to_json(m)["to"].is_null());
}

TEST(Wire, InboundRoundTripEveryKind) {
  std::vector<InboundMessage> msgs;
  msgs.push_back(Hello{1, "ann", "#fff", false, std::nullopt});
  msgs.push_back(Hello{1, "bob", "", true, std::string("bob")});
  msgs.push_back(MetricsRequest{ParticipantId("ann")});
  PresenceEvent join{ParticipantId("A"), PresenceKind::Join, 5, "Avery", "#123", true};
  msgs.push_back(SessionEvent{join});
  msgs.push_back(SessionEvent{PresenceEvent{ParticipantId("A"), PresenceKind::Dropout, 9, "A", "", false}});
  msgs.push_back(SessionEvent{GazeSample{ParticipantId("U"), GazeTarget::panel(ParticipantId("A")), 7}});
  msgs.push_back(SessionEvent{GazeSample{ParticipantId("U"), GazeTarget::table(), 8}});
  msgs.push_back(SessionEvent{PinchEvent{ParticipantId("U"), 11}});
  TokenBatch b{ParticipantId("A"),
               {TimedToken{ParticipantId("A"), "hi", 0, 100},
                TimedToken{ParticipantId("A"), "there", 150, 300}},
               true,
               320};
  msgs.push_back(SessionEvent{b});

  for (const auto& m : msgs) {
    const Json j = to_json(m);
    const InboundMessage back = decode_inbound_line(j.dump());
    EXPECT_EQ(to_json(back), j) << j.dump();
  }
}

TEST(Wire, DecodeErrorsAreMalformedPayload) {
  EXPECT_EQ(decode_error("not json"), ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error("\"a string\""), ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error(R"({"type":"Bogus","payload":{}})"), ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error(R"({"type":"Pinch"})"), ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error(R"({"type":"Pinch","payload":[]})"), ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error(R"({"type":"Pinch","payload":{"user":5}})"), ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error(R"({"type":"GazeUpdate","payload":{"user":"u","target":{"kind":"wall"}}})"),
            ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error(R"({"type":"GazeUpdate","payload":{"user":"u","target":{"kind":"avatar"}}})"),
            ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error(R"({"type":"TimedTokenBatch","payload":{"speaker":"a","tokens":{}}})"),
            ErrorCode::MalformedPayload);
  EXPECT_EQ(decode_error(R"({"type":"Hello","payload":{"protocol_version":1,"name":"x","resume_id":3}})"),
            ErrorCode::MalformedPayload);
  // Server-only message types are refused.
  EXPECT_EQ(decode_error(R"({"type":"PanelShow","payload":{}})"), ErrorCode::MalformedPayload);
}

TEST(Wire, ErrorNamesFieldPath) {
  try {
    decode_inbound_line(
        R"({"type":"TimedTokenBatch","payload":{"speaker":"a","tokens":[{"word":"x","onset_ms":0}]}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("tokens[0]"), std::string::npos) << e.what();
  }
}

TEST(Wire, GazeTargetJson) {
  EXPECT_EQ(to_json(GazeTarget::none()), Json({{"kind", "none"}}));
  EXPECT_EQ(to_json(GazeTarget::avatar(ParticipantId("A"))), Json({{"kind", "avatar"}, {"id", "A"}}));
  EXPECT_EQ(gaze_target_from_json(Json{{"kind", "object"}}), GazeTarget::object());
}

TEST(Wire, RecordsRoundTrip) {
  Utterance u{"u3", ParticipantId("A"), "hello world", 100, 900, 3};
  EXPECT_EQ(utterance_from_json(to_json(u)), u);
  Summary s{"hello…", 1, {"u3"}, 12, true};
  EXPECT_EQ(summary_from_json(to_json(s)), s);
  FsmConfig c;
  c.fade_after_ms = 2500;
  EXPECT_EQ(fsm_config_from_json(to_json(c)), c);
}

TEST(Wire, FsmConfigPartialOverride) {
  const FsmConfig c = fsm_config_from_json(Json{{"read_after_gaze_ms", 1200}});
  EXPECT_EQ(c.read_after_gaze_ms, 1200);
  EXPECT_EQ(c.fade_after_ms, 2000);
  try {
    fsm_config_from_json(Json{{"fade_after_ms", "slow"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
  }
}

TEST(Wire, PanelJsonCarriesIndicatorAndColor) {
  Panel p;
  p.panel_id = "p9";
  p.owner = ParticipantId("A");
  p.viewer = ParticipantId("U");
  p.kind = PanelKind::ReEngagementSummary;
  p.indicator = Indicator::OrangeCircle;
  const Json j = to_json(p, "#f58231");
  EXPECT_EQ(j["indicator"], "OrangeCircle");
  EXPECT_EQ(j["kind"], "ReEngagementSummary");
  EXPECT_EQ(j["color"], "#f58231");
  EXPECT_EQ(j["state"], "Visible");
}
