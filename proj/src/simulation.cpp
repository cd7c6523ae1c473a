#include "catchup/simulation.hpp"

#include "catchup/error.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

namespace catchup {

namespace {

struct WordEvent {
  Timestamp t;
  std::size_t line;
  std::size_t word;
};

// Hand-rolled Fisher-Yates so the order only depends on the mt19937_64
// stream, which the standard pins down exactly.
std::vector<ParticipantId> shuffled_agents(const MeetingScript& s, std::uint64_t seed) {
  std::vector<ParticipantId> ids;
  for (const auto& a : s.agents) ids.push_back(a.id);
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng() % i]);
  return ids;
}

class Subject {
public:
  Subject(const MeetingScript& script, const SimulationOptions& opt, SessionDriver& driver)
      : script_(script), opt_(opt), driver_(driver), id_(opt.schedule.user),
        rr_order_(shuffled_agents(script, opt.seed)) {
    for (const auto& line : script.lines) {
      const Timestamp end = line.end_ms();
      if (end >= opt.schedule.dropout_at_ms && end <= opt.schedule.rejoin_at_ms) {
        missed_words_ += line.words.size();
      }
    }
  }

  const ParticipantId& id() const { return id_; }

  void on_rejoin(Timestamp t) {
    rejoined_ = true;
    if (opt_.mode != InterfaceMode::EngageSync) {
      catchup_end_ = t + reading_time_ms(missed_words_, opt_.reading_wpm);
    }
  }

  bool busy() const {
    if (opt_.mode != InterfaceMode::EngageSync) return rejoined_ && !caught_up_;
    const UserEngagement* fsm = driver_.session().engagement(id_);
    return fsm && (fsm->mode() == Mode::ReEngagement || fsm->current_window());
  }

  /// One tracker sample at `t` (the subject is present).
  void sample(Timestamp t) {
    if (catchup_end_ && !caught_up_ && t >= *catchup_end_) {
      driver_.mark("CaughtUp", id_);
      caught_up_ = true;
    }
    if (opt_.policy.kind == GazePolicyKind::ScriptedTrace) {
      for (const auto& s : opt_.policy.trace) {
        if (s.t_ms == t) look(s.target, t);
      }
      return;
    }
    look(choose(t), t);
    maybe_pinch(t);
  }

private:
  std::optional<ParticipantId> speaker_at(Timestamp t) const {
    const ScriptLine* best = nullptr;
    for (const auto& l : script_.lines) {
      if (l.start_ms <= t && t <= l.end_ms()) best = &l;
    }
    return best ? std::optional(best->speaker) : std::nullopt;
  }

  ParticipantId follow(Timestamp t) const {
    if (auto s = speaker_at(t)) return *s;
    const ScriptLine* last = nullptr;
    for (const auto& l : script_.lines) {
      if (l.end_ms() < t && (!last || l.end_ms() >= last->end_ms())) last = &l;
    }
    return last ? last->speaker : script_.agents.front().id;
  }

  GazeTarget choose(Timestamp t) const {
    if (catchup_end_ && !caught_up_) {
      if (opt_.mode == InterfaceMode::TableTI) return GazeTarget::table();
      return GazeTarget::panel(follow(t));
    }
    if (opt_.mode == InterfaceMode::EngageSync) {
      const UserEngagement* fsm = driver_.session().engagement(id_);
      if (fsm && fsm->mode() == Mode::ReEngagement) {
        if (auto owner = next_orange(*fsm)) return GazeTarget::panel(*owner);
      }
    }
    if (opt_.policy.kind == GazePolicyKind::RoundRobin) {
      const auto slot = static_cast<std::size_t>(t / opt_.policy.round_robin_dwell_ms);
      return GazeTarget::avatar(rr_order_[slot % rr_order_.size()]);
    }
    return GazeTarget::avatar(follow(t));
  }

  // Unread orange panel whose earliest source utterance came first.
  std::optional<ParticipantId> next_orange(const UserEngagement& fsm) const {
    std::map<std::string, std::uint64_t> seq_of;
    for (const auto& u : driver_.session().transcript()) seq_of[u.utterance_id] = u.seq;
    std::optional<ParticipantId> best;
    std::uint64_t best_seq = 0;
    for (const auto& p : fsm.visible_panels()) {
      if (p.kind != PanelKind::ReEngagementSummary || p.state != PanelState::Visible) continue;
      std::uint64_t first = UINT64_MAX;
      for (const auto& id : p.source_ids) first = std::min(first, seq_of[id]);
      if (!best || first < best_seq) {
        best = p.owner;
        best_seq = first;
      }
    }
    return best;
  }

  void look(const GazeTarget& target, Timestamp t) {
    if (!(target == current_)) {
      current_ = target;
      since_ = t;
      pinched_ = false;
    }
    driver_.ingest(GazeSample{id_, target, t});
  }

  void maybe_pinch(Timestamp t) {
    if (opt_.mode != InterfaceMode::EngageSync || pinched_) return;
    if (current_.kind != GazeTarget::Kind::Avatar || t - since_ < 1000) return;
    const UserEngagement* fsm = driver_.session().engagement(id_);
    if (!fsm || fsm->mode() != Mode::Engagement || fsm->current_window()) return;
    if (fsm->panel_on(current_.participant)) return;
    if (speaker_at(t) != current_.participant) return;
    driver_.ingest(PinchEvent{id_, t});
    pinched_ = true;
  }

  const MeetingScript& script_;
  const SimulationOptions& opt_;
  SessionDriver& driver_;
  ParticipantId id_;
  std::vector<ParticipantId> rr_order_;
  std::size_t missed_words_ = 0;

  GazeTarget current_;
  Timestamp since_ = 0;
  bool pinched_ = false;
  bool rejoined_ = false;
  bool caught_up_ = false;
  std::optional<Timestamp> catchup_end_;
};

Json run_json(const MeetingScript& script, const SimulationOptions& opt) {
  Json agents = Json::array();
  for (const auto& a : script.agents) {
    agents.push_back(Json{{"id", a.id.str()}, {"role", to_string(a.role)}});
  }
  return Json{{"script", opt.script_name},
              {"topic", script.topic},
              {"agents", std::move(agents)},
              {"subject", opt.schedule.user.str()},
              {"mode", to_string(opt.mode)},
              {"dropout_at_ms", opt.schedule.dropout_at_ms},
              {"rejoin_at_ms", opt.schedule.rejoin_at_ms},
              {"policy", to_string(opt.policy.kind)},
              {"sample_period_ms", opt.policy.sample_period_ms},
              {"seed", opt.seed},
              {"reading_wpm", opt.reading_wpm}};
}

}  // namespace

void DropoutSchedule::validate(Timestamp script_end_ms) const {
  if (dropout_at_ms < 0 || dropout_at_ms >= rejoin_at_ms || rejoin_at_ms > script_end_ms) {
    throw Error(ErrorCode::ScheduleOutOfRange,
                "dropout schedule [" + std::to_string(dropout_at_ms) + ", " +
                    std::to_string(rejoin_at_ms) + "] must satisfy 0 <= dropout < rejoin <= " +
                    std::to_string(script_end_ms));
  }
}

std::string_view to_string(GazePolicyKind k) {
  switch (k) {
    case GazePolicyKind::FollowSpeaker: return "follow_speaker";
    case GazePolicyKind::RoundRobin: return "round_robin";
    case GazePolicyKind::ScriptedTrace: return "scripted_trace";
  }
  return "?";
}

GazePolicyKind parse_gaze_policy(std::string_view s) {
  if (s == "follow_speaker" || s == "FollowSpeaker") return GazePolicyKind::FollowSpeaker;
  if (s == "round_robin" || s == "RoundRobin") return GazePolicyKind::RoundRobin;
  if (s == "scripted_trace" || s == "ScriptedTrace") return GazePolicyKind::ScriptedTrace;
  throw Error(ErrorCode::BadConfig, "policy: expected follow_speaker, round_robin or "
                                    "scripted_trace, got '" + std::string(s) + "'");
}

Timestamp reading_time_ms(std::size_t words, int wpm) {
  if (wpm <= 0) throw Error(ErrorCode::BadConfig, "reading_wpm must be positive");
  const auto num = static_cast<Timestamp>(words) * 60000;
  return (num + wpm - 1) / wpm;
}

SimulationResult run_simulation(const MeetingScript& script, const SimulationOptions& opt) {
  const Timestamp script_end = script.duration_ms();
  opt.schedule.validate(script_end);
  if (opt.policy.sample_period_ms <= 0) {
    throw Error(ErrorCode::BadConfig, "sample_period_ms must be positive");
  }
  if (opt.policy.kind == GazePolicyKind::RoundRobin && opt.policy.round_robin_dwell_ms <= 0) {
    throw Error(ErrorCode::BadConfig, "round_robin_dwell_ms must be positive");
  }
  reading_time_ms(0, opt.reading_wpm);
  if (script.agent(opt.schedule.user)) {
    throw Error(ErrorCode::BadConfig, "subject id " + opt.schedule.user.str() +
                                          " collides with a script agent");
  }
  if (!std::is_sorted(opt.policy.trace.begin(), opt.policy.trace.end(),
                      [](const GazeSample& a, const GazeSample& b) { return a.t_ms < b.t_ms; })) {
    throw Error(ErrorCode::InvalidRequest, "scripted gaze trace must be sorted by time");
  }

  VirtualClock clock;
  ExtractiveSummarizer extractive;
  InlineDispatcher dispatcher(extractive, clock);

  LogHeader header;
  header.session.session_id = "sim";
  header.session.interface_mode = opt.mode;
  header.session.fsm = opt.fsm;
  header.session.pause_threshold_ms = opt.pause_threshold_ms;
  header.summary_mode = "inline";
  header.run = run_json(script, opt);
  SessionDriver driver(header, clock, dispatcher);

  std::vector<WordEvent> words;
  for (std::size_t i = 0; i < script.lines.size(); ++i) {
    for (std::size_t k = 0; k < script.lines[i].words.size(); ++k) {
      words.push_back({script.lines[i].words[k].offset_ms, i, k});
    }
  }
  std::stable_sort(words.begin(), words.end(),
                   [](const WordEvent& a, const WordEvent& b) { return a.t < b.t; });

  std::set<Timestamp> extra = {opt.schedule.dropout_at_ms, opt.schedule.rejoin_at_ms};
  for (const auto& s : opt.policy.trace) extra.insert(s.t_ms);

  Subject subject(script, opt, driver);
  const ParticipantId& me = subject.id();
  const Timestamp period = opt.policy.sample_period_ms;
  const Timestamp base_end = script_end + kRunTailMs;
  const Timestamp hard_end = base_end + kCatchUpCapMs;
  bool present = true;

  std::size_t wi = 0;
  auto ei = extra.begin();
  Timestamp next_grid = 0;
  Timestamp t = 0;
  while (true) {
    if (t == 0) {
      for (const auto& a : script.agents) {
        driver.ingest(PresenceEvent{a.id, PresenceKind::Join, 0, a.name, a.color, true});
      }
      driver.ingest(PresenceEvent{me, PresenceKind::Join, 0, "Subject", "", false});
    }
    if (t == opt.schedule.dropout_at_ms) {
      driver.ingest(PresenceEvent{me, PresenceKind::Dropout, t, {}, {}, false});
      present = false;
    }
    if (t == opt.schedule.rejoin_at_ms) {
      driver.ingest(PresenceEvent{me, PresenceKind::Rejoin, t, {}, {}, false});
      present = true;
      subject.on_rejoin(t);
    }
    const bool on_grid = t % period == 0;
    const bool traced = opt.policy.kind == GazePolicyKind::ScriptedTrace;
    if (present && (traced || on_grid)) subject.sample(t);

    std::map<std::size_t, TokenBatch> batches;  // by line, in script order
    for (; wi < words.size() && words[wi].t == t; ++wi) {
      const ScriptLine& line = script.lines[words[wi].line];
      const WordTiming& w = line.words[words[wi].word];
      TokenBatch& b = batches[words[wi].line];
      b.speaker = line.speaker;
      b.t_ms = t;
      b.tokens.push_back({line.speaker, w.word, w.onset_ms, w.offset_ms});
    }
    for (const auto& [line, batch] : batches) driver.ingest(batch);
    driver.advance();

    if (t >= hard_end || (t >= base_end && !subject.busy())) break;

    if (next_grid <= t) next_grid = (t / period + 1) * period;
    while (ei != extra.end() && *ei <= t) ++ei;
    Timestamp next = next_grid;
    if (wi < words.size()) next = std::min(next, words[wi].t);
    if (ei != extra.end()) next = std::min(next, *ei);
    t = next;
    clock.advance_to(t);
  }

  driver.metrics(MetricsRequest{me});
  driver.finish();

  SimulationResult result;
  result.log = driver.log();
  result.report = compute_report(result.log, me);
  return result;
}

}  // namespace catchup
