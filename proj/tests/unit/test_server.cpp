#include "catchup/error.hpp"
#include "catchup/event_log.hpp"
#include "catchup/server.hpp"
#include "net_client.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace catchup;
using namespace catchup::testing;
namespace fs = std::filesystem;

namespace {

Json msg(const std::string& type, Json payload) { return Json{{"type", type}, {"payload", std::move(payload)}}; }

Json hello(const std::string& name, std::optional<std::string> resume = std::nullopt) {
  Json p{{"protocol_version", 1}, {"name", name}};
  if (resume) p["resume_id"] = *resume;
  return msg("Hello", p);
}

Json say(const std::string& who, std::vector<std::string> words) {
  Json toks = Json::array();
  int t = 0;
  for (auto& w : words) {
    toks.push_back({{"word", w}, {"onset_ms", t}, {"offset_ms", t + 200}});
    t += 250;
  }
  return msg("TimedTokenBatch", {{"speaker", who}, {"final", true}, {"tokens", toks}});
}

class ServerTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("catchup-server-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    ServerOptions o;
    o.port = 0;
    o.web_port = 0;
    o.web_root = CATCHUP_WEB_DIR;
    o.log_dir = dir.string();
    o.session.session_id = "srv";
    host = std::make_unique<SessionHost>(o, std::make_unique<ExtractiveSummarizer>());
    host->start();
  }
  void TearDown() override {
    host.reset();
    fs::remove_all(dir);
  }

  fs::path dir;
  std::unique_ptr<SessionHost> host;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_F(ServerTest, HelloWelcomeOverTcp) {
  LineClient a(host->port());
  a.send(hello("ana"));
  auto w = a.next();
  ASSERT_TRUE(w);
  EXPECT_EQ((*w)["type"], "Welcome");
  EXPECT_EQ((*w)["payload"]["participant_id"], "ana");
  EXPECT_EQ((*w)["payload"]["session_id"], "srv");
  EXPECT_EQ((*w)["deliver_seq"], 1);
  auto j = a.wait_for("PresenceEvent");
  ASSERT_TRUE(j);
  EXPECT_EQ((*j)["payload"]["kind"], "Join");
  EXPECT_GT((*j)["deliver_seq"].get<int>(), 1);
}

TEST_F(ServerTest, BadLinesGetSeqZeroErrors) {
  LineClient a(host->port());
  a.send_raw("{not json");
  auto e = a.next();
  ASSERT_TRUE(e);
  EXPECT_EQ((*e)["type"], "Error");
  EXPECT_EQ((*e)["seq"], 0);
  EXPECT_EQ((*e)["payload"]["code"], "MalformedPayload");

  a.send(msg("Pinch", {{"user", "ana"}}));
  e = a.next();
  ASSERT_TRUE(e);
  EXPECT_EQ((*e)["payload"]["code"], "ProtocolError");

  a.send(hello("ana"));
  ASSERT_TRUE(a.wait_for("Welcome"));
  a.send(hello("ana"));
  e = a.wait_for("Error");
  ASSERT_TRUE(e);
  EXPECT_EQ((*e)["seq"], 0);

  a.send(msg("Pinch", {{"user", "someone-else"}}));
  e = a.wait_for("Error");
  ASSERT_TRUE(e);
  EXPECT_EQ((*e)["payload"]["code"], "ProtocolError");
}

TEST_F(ServerTest, UtteranceReachesOtherClients) {
  LineClient a(host->port());
  LineClient b(host->port());
  a.send(hello("ana"));
  ASSERT_TRUE(a.wait_for("Welcome"));
  b.send(hello("ben"));
  ASSERT_TRUE(b.wait_for("Welcome"));
  a.send(say("ana", {"we", "should", "ship", "friday"}));
  auto u = b.wait_for("UtteranceFinal");
  ASSERT_TRUE(u);
  EXPECT_EQ((*u)["payload"]["speaker"], "ana");
  EXPECT_EQ((*u)["payload"]["text"], "we should ship friday");
}

TEST_F(ServerTest, CloseIsDropoutAndResumeRejoins) {
  LineClient b(host->port());
  b.send(hello("ben"));
  ASSERT_TRUE(b.wait_for("Welcome"));
  {
    LineClient a(host->port());
    a.send(hello("ana"));
    ASSERT_TRUE(a.wait_for("Welcome"));
    a.close();
  }
  auto d = b.wait_for("PresenceEvent");
  while (d && (*d)["payload"]["kind"] != "Dropout") d = b.wait_for("PresenceEvent");
  ASSERT_TRUE(d);
  EXPECT_EQ((*d)["payload"]["user"], "ana");

  LineClient a2(host->port());
  a2.send(hello("ana", "ana"));
  auto w = a2.wait_for("Welcome");
  ASSERT_TRUE(w);
  EXPECT_EQ((*w)["payload"]["participant_id"], "ana");
  auto r = b.wait_for("PresenceEvent");
  ASSERT_TRUE(r);
  EXPECT_EQ((*r)["payload"]["kind"], "Rejoin");
}

TEST_F(ServerTest, WebSocketSpeaksSameProtocol) {
  ASSERT_TRUE(host->web_port());
  WsClient w(*host->web_port());
  w.send(hello("wes"));
  Json welcome = w.wait_for("Welcome");
  EXPECT_EQ(welcome["payload"]["participant_id"], "wes");

  LineClient t(host->port());
  t.send(hello("tia"));
  ASSERT_TRUE(t.wait_for("Welcome"));
  w.send(say("wes", {"hello", "from", "the", "browser"}));
  auto u = t.wait_for("UtteranceFinal");
  ASSERT_TRUE(u);
  EXPECT_EQ((*u)["payload"]["speaker"], "wes");
  w.close();
}

TEST_F(ServerTest, StaticAssets) {
  const auto port = *host->web_port();
  auto idx = http_get(port, "/");
  EXPECT_EQ(idx.status, 200);
  EXPECT_NE(idx.content_type.find("text/html"), std::string::npos);
  EXPECT_EQ(idx.body, slurp(std::string(CATCHUP_WEB_DIR) + "/index.html"));
  auto js = http_get(port, "/client.js");
  EXPECT_EQ(js.status, 200);
  EXPECT_NE(js.content_type.find("javascript"), std::string::npos);
  EXPECT_EQ(http_get(port, "/style.css").status, 200);
  EXPECT_EQ(http_get(port, "/missing.png").status, 404);
  EXPECT_EQ(http_get(port, "/../CMakeLists.txt").status, 400);
  EXPECT_EQ(http_get(port, "/%2e%2e/CMakeLists.txt").status / 100, 4);
}

TEST_F(ServerTest, PortInUse) {
  ServerOptions o;
  o.port = host->port();
  o.log_dir = dir.string();
  SessionHost clash(o, std::make_unique<ExtractiveSummarizer>());
  try {
    clash.start();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PortInUse);
  }
}

TEST_F(ServerTest, StopFlushesReplayableLog) {
  {
    LineClient a(host->port());
    LineClient b(host->port());
    a.send(hello("ana"));
    ASSERT_TRUE(a.wait_for("Welcome"));
    b.send(hello("ben"));
    ASSERT_TRUE(b.wait_for("Welcome"));
    b.send(msg("GazeUpdate", {{"user", "ben"}, {"target", {{"kind", "avatar"}, {"id", "ana"}}}}));
    a.send(say("ana", {"the", "budget", "is", "approved", "for", "next", "quarter"}));
    ASSERT_TRUE(b.wait_for("UtteranceFinal"));
    b.send(msg("Pinch", {{"user", "ben"}}));
    std::this_thread::sleep_for(std::chrono::milliseconds(250));
  }
  const std::string path = host->log_path();
  host->stop();
  host->stop();
  const EventLog log = parse_event_log(slurp(path));
  EXPECT_GT(log.records.size(), 5u);
  const ReplayResult r = replay(log);
  EXPECT_TRUE(r.identical) << r.detail;
}

// A browser-style session over the WebSocket: look and pinch, drop out while
// others talk, come back, read every orange panel.
TEST(ServerScripted, BrowserCatchUpEndsInEngagement) {
  const fs::path dir = fs::temp_directory_path() / "catchup-server-scripted";
  fs::remove_all(dir);
  ServerOptions o;
  o.port = 0;
  o.web_port = 0;
  o.log_dir = dir.string();
  o.session.fsm.read_after_gaze_ms = 300;
  SessionHost host(o, std::make_unique<ExtractiveSummarizer>());
  host.start();

  auto u = std::make_unique<WsClient>(*host.web_port());
  u->send(hello("U"));
  const Json welcome = u->wait_for("Welcome");
  const auto t0 = std::chrono::steady_clock::now();
  const Timestamp base = welcome["t_ms"];
  auto server_now = [&] {
    return base + std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  };
  // Two words ending now.
  auto speak = [&](LineClient& c, const std::string& who, const std::string& a, const std::string& b) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    const Timestamp end = server_now();
    Json toks = Json::array({Json{{"word", a}, {"onset_ms", end - 20}, {"offset_ms", end - 12}},
                             Json{{"word", b}, {"onset_ms", end - 10}, {"offset_ms", end}}});
    c.send(msg("TimedTokenBatch", {{"speaker", who}, {"final", true}, {"tokens", toks}}));
    ASSERT_TRUE(c.wait_for("UtteranceFinal"));
  };

  LineClient a(host.port());
  a.send(hello("A"));
  ASSERT_TRUE(a.wait_for("Welcome"));
  LineClient b(host.port());
  b.send(hello("B"));
  ASSERT_TRUE(b.wait_for("Welcome"));

  speak(a, "A", "budget", "approved");
  u->send(msg("GazeUpdate", {{"user", "U"}, {"target", {{"kind", "avatar"}, {"id", "A"}}}}));
  u->send(msg("Pinch", {{"user", "U"}}));
  EXPECT_EQ(u->wait_for("PanelShow")["payload"]["panel"]["owner"], "A");

  u->close();
  u.reset();
  for (;;) {
    auto p = b.wait_for("PresenceEvent");
    ASSERT_TRUE(p);
    if ((*p)["payload"]["user"] == "U" && (*p)["payload"]["kind"] == "Dropout") break;
  }
  speak(a, "A", "we", "ship");
  speak(b, "B", "not", "yet");

  u = std::make_unique<WsClient>(*host.web_port());
  u->send(hello("U", "U"));
  EXPECT_EQ(u->wait_for("Welcome")["payload"]["participant_id"], "U");
  std::set<std::string> owners;
  for (;;) {
    const Json m = u->next();
    if (m["type"] == "PanelShow" && m["payload"]["panel"]["kind"] == "ReEngagementSummary") {
      owners.insert(m["payload"]["panel"]["owner"].get<std::string>());
    }
    if (m["type"] == "ModeChange") {
      EXPECT_EQ(m["payload"]["mode"], "ReEngagement");
      break;
    }
  }
  EXPECT_EQ(owners, (std::set<std::string>{"A", "B"}));

  for (const char* who : {"A", "B"}) {
    u->send(msg("GazeUpdate", {{"user", "U"}, {"target", {{"kind", "panel"}, {"id", who}}}}));
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
  }
  const Json back = u->wait_for("ModeChange");
  EXPECT_EQ(back["payload"]["mode"], "Engagement");
  u->close();
  host.stop();
  fs::remove_all(dir);
}
