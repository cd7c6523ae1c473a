#include "catchup/engagement.hpp"
#include "catchup/error.hpp"

#include "fakes.hpp"

#include <gtest/gtest.h>

using namespace catchup;
using namespace catchup::testing;

namespace {

template <class T>
std::vector<T> effects_of(const FsmEffects& fx) {
  std::vector<T> out;
  for (const auto& e : fx) {
    if (const auto* p = std::get_if<T>(&e)) out.push_back(*p);
  }
  return out;
}

// One EngageSync viewer "U" among members A, B (and optionally more).
struct Rig {
  FakeView view;
  RecordingPort port;
  FsmConfig config;
  std::unique_ptr<UserEngagement> fsm;
  FsmEffects fx;

  explicit Rig(InterfaceMode mode = InterfaceMode::EngageSync,
               std::vector<std::string> others = {"A", "B"}) {
    view.member_set.insert(pid("U"));
    for (const auto& o : others) view.member_set.insert(pid(o));
    fsm = std::make_unique<UserEngagement>(pid("U"), mode, config, view, port, counter_ids());
    fsm->on_join(0, fx);
  }

  void look(GazeTarget t, Timestamp now) { fsm->on_gaze(gaze("U", std::move(t), now), fx); }
  void ticks(Timestamp from, Timestamp to) {
    for (Timestamp t = from; t <= to; t += 100) fsm->tick(t, fx);
  }
  // Dropout at `out`, utterances delivered, rejoin at `in`, resolve on the next tick.
  void miss(Timestamp out, Timestamp in, const std::vector<Utterance>& us) {
    fsm->on_presence(PresenceKind::Dropout, out, fx);
    for (const auto& u : us) fsm->on_utterance(u, fx);
    fsm->on_presence(PresenceKind::Rejoin, in, fx);
    fsm->tick(in + 100, fx);
  }
};

}  // namespace

TEST(ClassifyContext, SpeakerListenerAndDisengaged) {
  FsmConfig c;
  const std::set<ParticipantId> speaking{pid("A")};
  EXPECT_EQ(classify_context(pid("U"), gaze("U", GazeTarget::avatar(pid("A")), 0), speaking, 0, c,
                             Mode::Engagement),
            (UserContext{UserContext::Kind::FocusedOnSpeaker, pid("A")}));
  EXPECT_EQ(classify_context(pid("U"), gaze("U", GazeTarget::avatar(pid("B")), 0), speaking, 0, c,
                             Mode::Engagement),
            (UserContext{UserContext::Kind::FocusedOnListener, pid("B")}));
  EXPECT_EQ(classify_context(pid("U"), gaze("U", GazeTarget::none(), 0), speaking, 3500, c,
                             Mode::Engagement)
                .kind,
            UserContext::Kind::Disengaged);
  EXPECT_EQ(classify_context(pid("U"), gaze("U", GazeTarget::none(), 0), speaking, 2999, c,
                             Mode::Engagement)
                .kind,
            UserContext::Kind::Unfocused);
  EXPECT_EQ(classify_context(pid("U"), gaze("U", GazeTarget::table(), 0), speaking, 0, c,
                             Mode::Engagement)
                .kind,
            UserContext::Kind::Unfocused);
  EXPECT_EQ(classify_context(pid("U"), gaze("U", GazeTarget::object(), 0), speaking, 0, c,
                             Mode::ReEngagement)
                .kind,
            UserContext::Kind::ReEngaging);
}

TEST(ClassifyContext, PanelCountsAsItsOwner) {
  FsmConfig c;
  EXPECT_EQ(classify_context(pid("U"), gaze("U", GazeTarget::panel(pid("A")), 0), {pid("A")}, 0, c,
                             Mode::Engagement),
            (UserContext{UserContext::Kind::FocusedOnSpeaker, pid("A")}));
}

TEST(ClassifyContext, UnknownTargets) {
  FsmConfig c;
  const std::set<ParticipantId> members{pid("U"), pid("A")};
  auto code = [&](const GazeSample& g) {
    try {
      classify_context(pid("U"), g, {}, 0, c, Mode::Engagement, &members);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code(gaze("U", GazeTarget::avatar(pid("U")), 0)), ErrorCode::UnknownTarget);
  EXPECT_EQ(code(gaze("U", GazeTarget::avatar(pid("Z")), 0)), ErrorCode::UnknownTarget);
}

TEST(FsmConfig, ValidateNamesField) {
  FsmConfig c;
  c.read_after_gaze_ms = 0;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
    EXPECT_NE(std::string(e.what()).find("read_after_gaze_ms"), std::string::npos);
  }
}

TEST(Pinch, OnSpeakerShowsLivePanel) {
  Rig r;
  r.view.speaking_set = {pid("A")};
  r.view.partial[pid("A")] = "we should";
  r.look(GazeTarget::avatar(pid("A")), 1000);
  r.fsm->on_pinch(1100, r.fx);
  const Panel* p = r.fsm->panel_on(pid("A"));
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->kind, PanelKind::Live);
  EXPECT_EQ(p->indicator, Indicator::NoCircle);
  EXPECT_EQ(p->text, "we should");
  EXPECT_EQ(p->viewer, pid("U"));
  EXPECT_TRUE(r.port.calls.empty());
}

TEST(Pinch, OnListenerShowsGreenSummary) {
  Rig r;
  r.view.last[pid("B")] = utt("u7", "B", "one two three four five six seven eight nine ten eleven", 0, 900);
  r.look(GazeTarget::avatar(pid("B")), 1000);
  r.fsm->on_pinch(1100, r.fx);
  const Panel* p = r.fsm->panel_on(pid("B"));
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->kind, PanelKind::EngagementSummary);
  EXPECT_EQ(p->indicator, Indicator::GreenCircle);
  EXPECT_EQ(p->text, "one two three four five six seven eight nine ten…");
  ASSERT_EQ(r.port.calls.size(), 1u);
  EXPECT_EQ(r.port.calls[0].request.word_limit, 10);
  EXPECT_EQ(r.port.calls[0].request.kind, SummaryKind::UtteranceSummary);
  EXPECT_EQ(effects_of<SummaryDelivered>(r.fx).size(), 1u);
}

TEST(Pinch, OnSilentListenerEmitsNotice) {
  Rig r;
  r.look(GazeTarget::avatar(pid("B")), 1000);
  r.fsm->on_pinch(1100, r.fx);
  EXPECT_EQ(r.fsm->panel_on(pid("B")), nullptr);
  const auto notices = effects_of<Notice>(r.fx);
  ASSERT_EQ(notices.size(), 1u);
  EXPECT_EQ(notices[0].code, "NoPriorUtterance");
}

TEST(Pinch, WhileUnfocusedOrDisengagedIsNoop) {
  Rig r;
  r.look(GazeTarget::table(), 1000);
  r.fsm->on_pinch(1100, r.fx);
  EXPECT_TRUE(r.fsm->visible_panels().empty());
  r.fsm->on_presence(PresenceKind::Dropout, 2000, r.fx);
  r.fsm->on_pinch(2100, r.fx);
  EXPECT_TRUE(r.fsm->visible_panels().empty());
}

TEST(Pinch, SecondPinchTogglesPanelOff) {
  Rig r;
  r.view.speaking_set = {pid("A")};
  r.look(GazeTarget::avatar(pid("A")), 1000);
  r.fsm->on_pinch(1100, r.fx);
  r.fsm->on_pinch(1200, r.fx);
  EXPECT_EQ(r.fsm->panel_on(pid("A")), nullptr);
}

TEST(Timers, FadeStrictlyAfterTwoSeconds) {
  Rig r;
  r.view.speaking_set = {pid("A")};
  r.look(GazeTarget::avatar(pid("A")), 9000);
  r.fsm->on_pinch(9000, r.fx);
  r.look(GazeTarget::table(), 10000);
  r.fsm->tick(12000, r.fx);
  EXPECT_NE(r.fsm->panel_on(pid("A")), nullptr);
  r.fsm->tick(12100, r.fx);
  EXPECT_EQ(r.fsm->panel_on(pid("A")), nullptr);
}

TEST(Timers, ReadAfterDwell) {
  Rig r;
  r.miss(1000, 5000, {utt("u1", "A", "alpha beta", 2000, 3000, 1)});
  ASSERT_EQ(r.fsm->mode(), Mode::ReEngagement);
  r.look(GazeTarget::panel(pid("A")), 6000);
  r.ticks(6000, 7400);
  EXPECT_EQ(r.fsm->panel_on(pid("A"))->state, PanelState::Visible);
  r.fsm->tick(7500, r.fx);
  // The only panel is read, so the user is back in Engagement mode.
  EXPECT_EQ(r.fsm->mode(), Mode::Engagement);
}

TEST(Timers, LookBackWithinGraceKeepsPanel) {
  Rig r;
  r.miss(1000, 5000, {utt("u1", "A", "alpha", 2000, 2500, 1), utt("u2", "B", "beta", 3000, 3500, 2)});
  r.look(GazeTarget::panel(pid("A")), 18000);
  r.ticks(18000, 19900);
  ASSERT_EQ(r.fsm->panel_on(pid("A"))->state, PanelState::Read);
  r.look(GazeTarget::table(), 20000);
  r.ticks(20000, 21400);
  r.look(GazeTarget::panel(pid("A")), 21500);
  ASSERT_NE(r.fsm->panel_on(pid("A")), nullptr);
  EXPECT_EQ(r.fsm->panel_on(pid("A"))->state, PanelState::Read);
}

TEST(Timers, ReadPanelHiddenAfterGrace) {
  Rig r;
  r.miss(1000, 5000, {utt("u1", "A", "alpha", 2000, 2500, 1), utt("u2", "B", "beta", 3000, 3500, 2)});
  r.look(GazeTarget::panel(pid("A")), 18000);
  r.ticks(18000, 19900);
  r.look(GazeTarget::table(), 20000);
  r.fsm->tick(22000, r.fx);
  EXPECT_NE(r.fsm->panel_on(pid("A")), nullptr);
  r.fsm->tick(22100, r.fx);
  EXPECT_EQ(r.fsm->panel_on(pid("A")), nullptr);
}

TEST(Window, DropoutOpensWindow) {
  Rig r;
  r.fsm->on_presence(PresenceKind::Dropout, 180000, r.fx);
  ASSERT_TRUE(r.fsm->current_window());
  EXPECT_EQ(r.fsm->current_window()->start_ms, 180000);
  EXPECT_FALSE(r.fsm->current_window()->end_ms);
  EXPECT_EQ(r.fsm->context().kind, UserContext::Kind::Disengaged);
}

TEST(Window, GazeWanderWithNoSpeechIsEmpty) {
  Rig r;
  r.look(GazeTarget::none(), 1000);
  r.ticks(1000, 3900);
  EXPECT_FALSE(r.fsm->current_window());
  r.fsm->tick(4000, r.fx);
  ASSERT_TRUE(r.fsm->current_window());
  EXPECT_TRUE(r.fsm->current_window()->utterance_ids.empty());
  // Looking back with nothing missed returns straight to Engagement.
  r.look(GazeTarget::avatar(pid("A")), 5000);
  r.fsm->tick(5100, r.fx);
  EXPECT_FALSE(r.fsm->current_window());
  EXPECT_EQ(r.fsm->mode(), Mode::Engagement);
  EXPECT_TRUE(r.fsm->visible_panels().empty());
  ASSERT_EQ(r.fsm->closed_windows().size(), 1u);
  EXPECT_TRUE(r.fsm->closed_windows()[0].utterance_ids.empty());
}

TEST(Window, CollectsOthersUtterancesInOrder) {
  Rig r;
  r.fsm->on_presence(PresenceKind::Dropout, 1000, r.fx);
  const std::vector<Utterance> us{
      utt("u1", "A", "a1", 1100, 1500, 1), utt("u2", "B", "b1", 1600, 2000, 2),
      utt("u3", "A", "a2", 2100, 2500, 3), utt("u4", "B", "b2", 2600, 3000, 4),
      utt("u5", "A", "a3", 3100, 3500, 5), utt("u6", "B", "b3", 3600, 4000, 6),
      utt("self", "U", "mine", 3600, 4000, 7)};
  for (const auto& u : us) r.fsm->on_utterance(u, r.fx);
  EXPECT_EQ(r.fsm->current_window()->utterance_ids,
            (std::vector<std::string>{"u1", "u2", "u3", "u4", "u5", "u6"}));
}

TEST(Reengage, OneOrangePanelPerSpeaker) {
  Rig r(InterfaceMode::EngageSync, {"A", "B", "C"});
  r.miss(1000, 9000,
         {utt("u1", "A", "a", 1100, 1500, 1), utt("u2", "B", "b", 1600, 2000, 2),
          utt("u3", "C", "c", 2100, 2500, 3), utt("u4", "A", "a2", 2600, 3000, 4)});
  const auto panels = r.fsm->visible_panels();
  ASSERT_EQ(panels.size(), 3u);
  for (const auto& p : panels) {
    EXPECT_EQ(p.kind, PanelKind::ReEngagementSummary);
    EXPECT_EQ(p.indicator, Indicator::OrangeCircle);
  }
  EXPECT_EQ(r.fsm->panel_on(pid("A"))->source_ids, (std::vector<std::string>{"u1", "u4"}));
  ASSERT_EQ(r.port.calls.size(), 3u);
  for (const auto& c : r.port.calls) EXPECT_EQ(c.request.word_limit, 15);
  EXPECT_EQ(r.fsm->mode(), Mode::ReEngagement);
}

TEST(Reengage, SevenAgentsSixSpoke) {
  Rig r(InterfaceMode::EngageSync, {"MA1", "MA2", "MA3", "MA4", "MA5", "MA6", "MA7"});
  std::vector<Utterance> us;
  for (int i = 1; i <= 6; ++i) {
    us.push_back(utt("u" + std::to_string(i), "MA" + std::to_string(i), "words here",
                     1000 + i * 1000, 1500 + i * 1000, static_cast<std::uint64_t>(i)));
  }
  r.miss(1000, 240000, us);
  EXPECT_EQ(r.fsm->visible_panels().size(), 6u);
  EXPECT_EQ(r.fsm->panel_on(pid("MA7")), nullptr);
}

TEST(Reengage, WithoutWindowIsProtocolError) {
  Rig r;
  try {
    r.fsm->on_reengage(100, r.fx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProtocolError);
  }
}

TEST(Reengage, WaitsForUnresolvedSpeech) {
  Rig r;
  r.fsm->on_presence(PresenceKind::Dropout, 1000, r.fx);
  r.fsm->on_utterance(utt("u1", "A", "a", 1100, 1500, 1), r.fx);
  r.fsm->on_presence(PresenceKind::Rejoin, 5000, r.fx);
  r.view.unresolved = true;
  r.fsm->tick(5100, r.fx);
  EXPECT_TRUE(r.fsm->window_closing());
  // B's utterance ends before the rejoin but is finalized late; it still belongs.
  r.fsm->on_utterance(utt("u2", "B", "b", 4000, 4900, 2), r.fx);
  r.view.unresolved = false;
  r.fsm->tick(5200, r.fx);
  EXPECT_FALSE(r.fsm->current_window());
  EXPECT_EQ(r.fsm->visible_panels().size(), 2u);
  EXPECT_EQ(r.fsm->closed_windows().back().utterance_ids, (std::vector<std::string>{"u1", "u2"}));
}

TEST(CheckAllRead, AllReadReturnsToEngagement) {
  Rig r(InterfaceMode::EngageSync, {"A", "B", "C"});
  r.miss(1000, 9000,
         {utt("u1", "A", "a", 1100, 1500, 1), utt("u2", "B", "b", 1600, 2000, 2),
          utt("u3", "C", "c", 2100, 2500, 3)});
  Timestamp t = 10000;
  for (const char* who : {"A", "B"}) {
    r.look(GazeTarget::panel(pid(who)), t);
    r.ticks(t, t + 1500);
    t += 1600;
  }
  // {Read, Read, Visible}: still re-engaging.
  EXPECT_EQ(r.fsm->mode(), Mode::ReEngagement);
  EXPECT_FALSE(r.fsm->check_all_read(t, r.fx));
  r.look(GazeTarget::panel(pid("C")), t);
  r.ticks(t, t + 1500);
  EXPECT_EQ(r.fsm->mode(), Mode::Engagement);
  EXPECT_TRUE(r.fsm->visible_panels().empty());
  const auto changes = effects_of<ModeChanged>(r.fx);
  ASSERT_EQ(changes.size(), 2u);
  EXPECT_EQ(changes[1].mode, Mode::Engagement);
}

TEST(LiveCaption, LatestWins) {
  Rig r;
  r.view.speaking_set = {pid("A")};
  r.look(GazeTarget::avatar(pid("A")), 1000);
  r.fsm->on_pinch(1000, r.fx);
  r.fsm->live_caption_update(pid("A"), "we should", r.fx);
  r.fsm->live_caption_update(pid("A"), "we should vote", r.fx);
  EXPECT_EQ(r.fsm->panel_on(pid("A"))->text, "we should vote");
  const auto n = r.fx.size();
  r.fsm->live_caption_update(pid("B"), "nobody sees this", r.fx);
  EXPECT_EQ(r.fx.size(), n);
}

TEST(LiveCaption, TwoViewersUpdatedIdentically) {
  FakeView view;
  view.member_set = {pid("U"), pid("V"), pid("A")};
  view.speaking_set = {pid("A")};
  RecordingPort port;
  FsmEffects fx;
  UserEngagement u(pid("U"), InterfaceMode::EngageSync, {}, view, port, counter_ids());
  UserEngagement v(pid("V"), InterfaceMode::EngageSync, {}, view, port, counter_ids());
  for (auto* f : {&u, &v}) {
    f->on_join(0, fx);
    f->on_gaze(GazeSample{f->user(), GazeTarget::avatar(pid("A")), 100}, fx);
    f->on_pinch(100, fx);
    f->live_caption_update(pid("A"), "same words", fx);
  }
  EXPECT_EQ(u.panel_on(pid("A"))->text, v.panel_on(pid("A"))->text);
  EXPECT_EQ(u.panel_on(pid("A"))->text, "same words");
}

TEST(AvatarTI, CaptionsOnEveryoneAndNoWindows) {
  Rig r(InterfaceMode::AvatarTI);
  EXPECT_EQ(r.fsm->visible_panels().size(), 2u);
  r.fsm->on_presence(PresenceKind::Dropout, 1000, r.fx);
  r.fsm->on_utterance(utt("u1", "A", "a", 1100, 1500, 1), r.fx);
  r.fsm->on_presence(PresenceKind::Rejoin, 5000, r.fx);
  r.fsm->tick(5100, r.fx);
  EXPECT_FALSE(r.fsm->current_window());
  EXPECT_TRUE(r.fsm->closed_windows().empty());
  for (const auto& p : r.fsm->visible_panels()) EXPECT_NE(p.kind, PanelKind::ReEngagementSummary);
}

TEST(TableTI, NoOrangePanels) {
  Rig r(InterfaceMode::TableTI);
  r.miss(1000, 5000, {utt("u1", "A", "a", 1100, 1500, 1)});
  EXPECT_TRUE(r.fsm->visible_panels().empty());
  EXPECT_EQ(r.fsm->mode(), Mode::Engagement);
  ASSERT_EQ(r.fsm->closed_windows().size(), 1u);
  r.fsm->on_pinch(6000, r.fx);
  EXPECT_TRUE(r.fsm->table_summary_view());
}

TEST(Deferred, SummaryArrivesLater) {
  Rig r;
  r.port.deferred = true;
  r.view.last[pid("B")] = utt("u1", "B", "hello there", 0, 900);
  r.look(GazeTarget::avatar(pid("B")), 1000);
  r.fsm->on_pinch(1000, r.fx);
  const Panel* p = r.fsm->panel_on(pid("B"));
  ASSERT_NE(p, nullptr);
  EXPECT_TRUE(p->summary_pending);
  Summary s;
  s.text = "hello there";
  s.word_count = 2;
  r.fsm->apply_summary(p->panel_id, SummaryKind::UtteranceSummary, s, r.fx);
  EXPECT_FALSE(r.fsm->panel_on(pid("B"))->summary_pending);
  EXPECT_EQ(r.fsm->panel_on(pid("B"))->text, "hello there");
}

TEST(Names, RoundTrip) {
  for (auto k : {PanelKind::Live, PanelKind::EngagementSummary, PanelKind::ReEngagementSummary}) {
    EXPECT_EQ(parse_panel_kind(to_string(k)), k);
  }
  for (auto i : {Indicator::NoCircle, Indicator::GreenCircle, Indicator::OrangeCircle}) {
    EXPECT_EQ(parse_indicator(to_string(i)), i);
  }
  EXPECT_EQ(indicator_for(PanelKind::Live), Indicator::NoCircle);
  EXPECT_EQ(indicator_for(PanelKind::EngagementSummary), Indicator::GreenCircle);
  EXPECT_EQ(indicator_for(PanelKind::ReEngagementSummary), Indicator::OrangeCircle);
}
