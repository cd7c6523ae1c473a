#include "catchup/session.hpp"

#include "catchup/error.hpp"

#include <algorithm>
#include <array>
#include <tuple>

namespace catchup {

namespace {

constexpr std::array<std::string_view, 8> kPalette = {
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324"};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void SessionConfig::validate() const {
  fsm.validate();
  if (pause_threshold_ms <= 0) {
    throw Error(ErrorCode::BadConfig, "pause_threshold_ms must be positive, got " +
                                          std::to_string(pause_threshold_ms));
  }
  if (session_id.empty()) throw Error(ErrorCode::BadConfig, "session_id must not be empty");
}

Json to_json(const SessionConfig& c) {
  return Json{{"session_id", c.session_id},
              {"interface_mode", to_string(c.interface_mode)},
              {"pause_threshold_ms", c.pause_threshold_ms},
              {"fsm", to_json(c.fsm)}};
}

SessionConfig session_config_from_json(const Json& j) {
  SessionConfig c;
  try {
    c.session_id = j.at("session_id").get<std::string>();
    c.interface_mode = parse_interface_mode(j.at("interface_mode").get<std::string>());
    c.pause_threshold_ms = j.at("pause_threshold_ms").get<Timestamp>();
    c.fsm = fsm_config_from_json(j.at("fsm"));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("session config: ") + e.what());
  }
  return c;
}

std::optional<Summary> InlineDispatcher::dispatch(std::uint64_t /*job_id*/,
                                                  const SummaryRequest& request) {
  return summarize_with_fallback(request, backend_, clock_);
}

Json to_json(const MetricsSnapshot& m) {
  Json latency = Json::object();
  for (const auto& [stage, stats] : m.latency) latency[std::string(to_string(stage))] = to_json(stats);
  Json users = Json::object();
  for (const auto& [id, c] : m.users) {
    users[id.str()] = Json{
        {"panels_shown", c.panels_shown}, {"pinches", c.pinches}, {"mode_changes", c.mode_changes}};
  }
  return Json{{"latency", std::move(latency)},
              {"users", std::move(users)},
              {"utterances", m.utterances},
              {"summaries_dispatched", m.summaries_dispatched},
              {"summaries_ready", m.summaries_ready}};
}

Session::Session(SessionConfig config, const ClockSource& clock, SummaryDispatcher& dispatcher)
    : config_(std::move(config)), clock_(clock), dispatcher_(dispatcher) {
  config_.validate();
}

Session::~Session() = default;

const UserEngagement* Session::engagement(const ParticipantId& user) const {
  auto it = fsms_.find(user);
  return it == fsms_.end() ? nullptr : it->second.get();
}

// ---- MeetingView -----------------------------------------------------------

bool Session::is_member(const ParticipantId& p) const { return participants_.contains(p); }

bool Session::is_present(const ParticipantId& p) const {
  auto it = participants_.find(p);
  return it != participants_.end() && it->second.connected;
}

std::set<ParticipantId> Session::members() const {
  std::set<ParticipantId> out;
  for (const auto& [id, info] : participants_) out.insert(id);
  return out;
}

std::vector<ParticipantId> Session::present_members() const {
  std::vector<ParticipantId> out;
  for (const auto& [id, info] : participants_) {
    if (info.connected) out.push_back(id);
  }
  return out;
}

std::set<ParticipantId> Session::speaking() const {
  std::set<ParticipantId> out;
  for (const auto& [id, seg] : segmenters_) {
    if (seg.has_open()) out.insert(id);
  }
  return out;
}

std::optional<Utterance> Session::last_utterance(const ParticipantId& p) const {
  auto it = last_utterance_.find(p);
  if (it == last_utterance_.end()) return std::nullopt;
  return transcript_[it->second];
}

std::string Session::partial_text(const ParticipantId& p) const {
  auto it = segmenters_.find(p);
  return it == segmenters_.end() ? std::string{} : it->second.partial_text();
}

std::optional<std::string> Session::latest_summary_text(const ParticipantId& p) const {
  auto it = latest_summary_.find(p);
  if (it == latest_summary_.end()) return std::nullopt;
  return it->second;
}

bool Session::speech_unresolved_through(Timestamp cutoff, const ParticipantId& exclude) const {
  for (const auto& [id, seg] : segmenters_) {
    if (id == exclude || !seg.has_open()) continue;
    if (seg.open()->end_ms <= cutoff) return true;
  }
  return false;
}

// ---- public operations -----------------------------------------------------

std::vector<WireMessage> Session::hello(const Hello& h, ParticipantId* assigned) {
  const Timestamp now = clock_.now();
  const ParticipantId requester(h.name);
  if (h.protocol_version != kProtocolVersion) {
    return error_message(Error(ErrorCode::VersionError,
                               "protocol_version " + std::to_string(h.protocol_version) +
                                   " not supported; server speaks " +
                                   std::to_string(kProtocolVersion)),
                         requester);
  }

  ParticipantId id;
  if (h.resume_id && participants_.contains(ParticipantId(*h.resume_id))) {
    id = ParticipantId(*h.resume_id);
    if (participants_.at(id).connected) {
      return error_message(Error(ErrorCode::ProtocolError, id.str() + " is already connected"),
                           requester);
    }
    PresenceEvent rejoin{id, PresenceKind::Rejoin, now, {}, {}, false};
    apply(rejoin, now);
  } else {
    std::string base = h.name.empty() ? "guest" : h.name;
    id = ParticipantId(base);
    for (int n = 2; participants_.contains(id); ++n) id = ParticipantId(base + "#" + std::to_string(n));
    register_participant(id, base, h.color, h.agent, now);
  }
  if (assigned) *assigned = id;

  Json roster = Json::array();
  for (const auto& [pid, info] : participants_) {
    roster.push_back(Json{{"id", pid.str()},
                          {"display_name", info.display_name},
                          {"color", info.color},
                          {"connected", info.connected},
                          {"agent", info.agent}});
  }
  Json panels = Json::array();
  for (const auto& entry : match_panels(id)) panels.push_back(to_json(entry.panel, entry.color));

  WireMessage welcome;
  welcome.type = MessageType::Welcome;
  welcome.t_ms = now;
  welcome.to = id;
  welcome.payload = Json{{"protocol_version", kProtocolVersion},
                         {"participant_id", id.str()},
                         {"session_id", config_.session_id},
                         {"interface_mode", to_string(config_.interface_mode)},
                         {"config", to_json(config_)},
                         {"roster", std::move(roster)},
                         {"panels", std::move(panels)}};
  outbox_.insert(outbox_.begin(), std::move(welcome));
  return take_outbox();
}

std::vector<WireMessage> Session::ingest(const SessionEvent& raw) {
  const Timestamp now = clock_.now();
  SessionEvent event = raw;
  std::visit([now](auto& ev) { ev.t_ms = now; }, event);
  try {
    validate(event);
  } catch (const Error& e) {
    return error_message(e, event_sender(event));
  }
  std::visit([&](const auto& ev) { apply(ev, now); }, event);
  return take_outbox();
}

std::vector<WireMessage> Session::advance() {
  const Timestamp now = clock_.now();
  if (last_advance_ && now < *last_advance_) {
    throw Error(ErrorCode::ClockError, "session time moved backwards");
  }
  last_advance_ = now;

  std::vector<UtteranceDraft> closed;
  for (auto& [id, seg] : segmenters_) {
    if (auto d = seg.close_if_idle(now)) closed.push_back(std::move(*d));
  }
  std::sort(closed.begin(), closed.end(), [](const UtteranceDraft& a, const UtteranceDraft& b) {
    return std::tie(a.end_ms, a.speaker) < std::tie(b.end_ms, b.speaker);
  });
  for (auto& d : closed) finalize(std::move(d), now);

  for (auto& [id, fsm] : fsms_) {
    FsmEffects fx;
    fsm->tick(now, fx);
    drain(fx, now);
  }
  return take_outbox();
}

std::vector<WireMessage> Session::complete_summary(std::uint64_t job_id, const Summary& summary) {
  const Timestamp now = clock_.now();
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) {
    return error_message(Error(ErrorCode::ProtocolError,
                               "unknown summary job " + std::to_string(job_id)),
                         std::nullopt);
  }
  Job job = std::move(it->second);
  jobs_.erase(it);
  ++summaries_ready_;
  latency_.record(LatencyStage::Summarization, summary.latency_ms);

  if (job.utterance) {
    deliver_utterance_summary(*job.utterance, summary, now);
  } else if (job.viewer && job.panel_id) {
    auto f = fsms_.find(*job.viewer);
    if (f != fsms_.end()) {
      FsmEffects fx;
      f->second->apply_summary(*job.panel_id, job.kind, summary, fx);
      drain(fx, now);
    }
  }
  return take_outbox();
}

std::vector<WireMessage> Session::metrics_message(const std::optional<ParticipantId>& to) {
  emit(MessageType::MetricsSnapshot, to, to_json(snapshot_metrics()), clock_.now());
  return take_outbox();
}

std::vector<PanelEntry> Session::match_panels(const ParticipantId& viewer) const {
  if (!participants_.contains(viewer)) {
    throw Error(ErrorCode::UnknownParticipant, "unknown participant " + viewer.str());
  }
  std::vector<PanelEntry> out;
  if (const auto* fsm = engagement(viewer)) {
    for (auto& p : fsm->visible_panels()) {
      PanelEntry e{p.owner, color_of(p.owner), p};
      out.push_back(std::move(e));
    }
  }
  return out;
}

MetricsSnapshot Session::snapshot_metrics() const {
  MetricsSnapshot m;
  for (auto stage : kLatencyStages) m.latency[stage] = latency_.stats(stage);
  for (const auto& [id, fsm] : fsms_) {
    m.users[id] = UserCounters{fsm->panels_shown(), fsm->pinches(), fsm->mode_changes()};
  }
  m.utterances = transcript_.size();
  m.summaries_dispatched = summaries_dispatched_;
  m.summaries_ready = summaries_ready_;
  return m;
}

// ---- internals ---------------------------------------------------------------

void Session::validate(const SessionEvent& event) const {
  const ParticipantId& sender = event_sender(event);
  if (sender.empty()) throw Error(ErrorCode::MalformedPayload, "event has no participant id");

  if (const auto* pe = std::get_if<PresenceEvent>(&event)) {
    auto it = participants_.find(pe->user);
    switch (pe->kind) {
      case PresenceKind::Join:
        if (it != participants_.end()) {
          throw Error(ErrorCode::MalformedPayload, pe->user.str() + " has already joined");
        }
        return;
      case PresenceKind::Dropout:
        if (it == participants_.end()) break;
        if (!it->second.connected) {
          throw Error(ErrorCode::ProtocolError, pe->user.str() + " is already dropped out");
        }
        return;
      case PresenceKind::Rejoin:
        if (it == participants_.end()) break;
        if (it->second.connected) {
          throw Error(ErrorCode::ProtocolError, pe->user.str() + " rejoined without a dropout");
        }
        return;
    }
  }
  if (!participants_.contains(sender)) {
    throw Error(ErrorCode::UnknownParticipant, "unknown participant " + sender.str());
  }

  if (const auto* g = std::get_if<GazeSample>(&event)) {
    if (g->target.anchored()) {
      if (g->target.participant == g->user) {
        throw Error(ErrorCode::MalformedPayload, "gaze target is the sender's own avatar");
      }
      if (!participants_.contains(g->target.participant)) {
        throw Error(ErrorCode::UnknownParticipant,
                    "gaze target " + g->target.participant.str() + " is not a session member");
      }
    }
  } else if (const auto* b = std::get_if<TokenBatch>(&event)) {
    std::optional<Timestamp> prev;
    if (auto it = segmenters_.find(b->speaker); it != segmenters_.end()) prev = it->second.last_offset();
    for (const auto& tok : b->tokens) {
      if (tok.speaker != b->speaker) {
        throw Error(ErrorCode::MalformedPayload, "token speaker differs from batch speaker");
      }
      if (count_words(tok.word) != 1) {
        throw Error(ErrorCode::MalformedPayload, "token word must be exactly one word");
      }
      if (tok.offset_ms < tok.onset_ms || (prev && tok.onset_ms < *prev)) {
        throw Error(ErrorCode::UnsortedTokens, "tokens for " + b->speaker.str() +
                                                   " overlap or are out of order at " +
                                                   std::to_string(tok.onset_ms));
      }
      prev = tok.offset_ms;
    }
  }
}

void Session::apply(const PresenceEvent& ev, Timestamp now) {
  if (ev.kind == PresenceKind::Join) {
    register_participant(ev.user, ev.display_name.empty() ? ev.user.str() : ev.display_name,
                         ev.color, ev.agent, now);
    return;
  }
  const bool present = ev.kind == PresenceKind::Rejoin;
  participants_.at(ev.user).connected = present;
  emit(MessageType::PresenceEvent, std::nullopt,
       Json{{"user", ev.user.str()}, {"kind", to_string(ev.kind)}}, now);
  for (auto& [id, fsm] : fsms_) {
    FsmEffects fx;
    if (id == ev.user) {
      fsm->on_presence(ev.kind, now, fx);
    } else {
      fsm->on_member_presence(ev.user, present, now, fx);
    }
    drain(fx, now);
  }
}

void Session::apply(const GazeSample& ev, Timestamp now) {
  if (!is_present(ev.user)) return;
  auto it = fsms_.find(ev.user);
  if (it == fsms_.end()) return;
  FsmEffects fx;
  it->second->on_gaze(ev, fx);
  drain(fx, now);
}

void Session::apply(const PinchEvent& ev, Timestamp now) {
  if (!is_present(ev.user)) return;
  auto it = fsms_.find(ev.user);
  if (it == fsms_.end()) return;
  FsmEffects fx;
  it->second->on_pinch(now, fx);
  drain(fx, now);
}

void Session::apply(const TokenBatch& ev, Timestamp now) {
  UtteranceSegmenter& seg = segmenter_for(ev.speaker);
  for (const auto& tok : ev.tokens) {
    if (auto closed = seg.push(tok)) finalize(std::move(*closed), now);
  }
  if (seg.has_open() && !ev.tokens.empty()) {
    const std::string partial = seg.partial_text();
    for (auto& [id, fsm] : fsms_) {
      FsmEffects fx;
      fsm->live_caption_update(ev.speaker, partial, fx);
      drain(fx, now);
    }
  }
  if (ev.final) {
    if (auto d = seg.flush()) finalize(std::move(*d), now);
  }
}

void Session::register_participant(const ParticipantId& id, std::string display_name,
                                   std::string color, bool agent, Timestamp now) {
  if (color.empty()) color = std::string(kPalette[participants_.size() % kPalette.size()]);
  participants_[id] = ParticipantInfo{display_name, color, true, agent};
  emit(MessageType::PresenceEvent, std::nullopt,
       Json{{"user", id.str()},
            {"kind", "Join"},
            {"display_name", display_name},
            {"color", color},
            {"agent", agent}},
       now);

  if (!agent) {
    SummaryPort& port = *this;
    auto fsm = std::make_unique<UserEngagement>(
        id, config_.interface_mode, config_.fsm, *this, port,
        [this] { return "p" + std::to_string(next_panel_++); });
    FsmEffects fx;
    fsm->on_join(now, fx);
    fsms_.emplace(id, std::move(fsm));
    drain(fx, now);
  }
  for (auto& [other, fsm] : fsms_) {
    if (other == id) continue;
    FsmEffects fx;
    fsm->on_member_presence(id, true, now, fx);
    drain(fx, now);
  }
}

void Session::finalize(UtteranceDraft&& draft, Timestamp now) {
  Utterance u;
  u.seq = transcript_.size() + 1;
  u.utterance_id = "u" + std::to_string(u.seq);
  u.speaker = draft.speaker;
  u.text = draft.text();
  u.start_ms = draft.start_ms;
  u.end_ms = draft.end_ms;
  transcript_.push_back(u);
  last_utterance_[u.speaker] = transcript_.size() - 1;
  latency_.record(LatencyStage::Transcription, std::max<Timestamp>(0, now - u.end_ms));

  emit(MessageType::UtteranceFinal, std::nullopt, to_json(u), now);
  for (auto& [id, fsm] : fsms_) {
    FsmEffects fx;
    fsm->on_utterance(u, fx);
    drain(fx, now);
  }

  SummaryRequest req;
  req.kind = SummaryKind::UtteranceSummary;
  req.source = {u};
  req.word_limit = config_.fsm.engagement_summary_words;
  req.speaker = u.speaker;
  const std::uint64_t job = next_job_++;
  ++summaries_dispatched_;
  if (auto s = dispatcher_.dispatch(job, req)) {
    ++summaries_ready_;
    latency_.record(LatencyStage::Summarization, s->latency_ms);
    deliver_utterance_summary(u, *s, now);
  } else {
    jobs_[job] = Job{SummaryKind::UtteranceSummary, std::nullopt, std::nullopt, u};
  }
}

void Session::deliver_utterance_summary(const Utterance& u, const Summary& s, Timestamp now) {
  latency_.record(LatencyStage::EndToEnd, std::max<Timestamp>(0, now - u.end_ms));
  latest_summary_[u.speaker] = s.text;
  emit(MessageType::SummaryReady, std::nullopt,
       Json{{"panel_id", nullptr},
            {"viewer", nullptr},
            {"kind", to_string(SummaryKind::UtteranceSummary)},
            {"speaker", u.speaker.str()},
            {"utterance_id", u.utterance_id},
            {"summary", to_json(s)}},
       now);
  for (auto& [id, fsm] : fsms_) {
    FsmEffects fx;
    fsm->on_utterance_summary(u.speaker, s.text, fx);
    drain(fx, now);
  }
}

std::optional<Summary> Session::dispatch(const std::string& panel_id, const ParticipantId& viewer,
                                         const SummaryRequest& request) {
  const std::uint64_t job = next_job_++;
  ++summaries_dispatched_;
  auto s = dispatcher_.dispatch(job, request);
  if (s) {
    ++summaries_ready_;
    latency_.record(LatencyStage::Summarization, s->latency_ms);
  } else {
    jobs_[job] = Job{request.kind, panel_id, viewer, std::nullopt};
  }
  return s;
}

void Session::drain(FsmEffects& fx, Timestamp now) {
  for (auto& effect : fx) {
    std::visit(
        overloaded{
            [&](const PanelShown& e) {
              emit(MessageType::PanelShow, e.panel.viewer,
                   Json{{"panel", to_json(e.panel, color_of(e.panel.owner))}}, now);
            },
            [&](const PanelUpdated& e) {
              emit(MessageType::PanelUpdate, e.panel.viewer,
                   Json{{"panel", to_json(e.panel, color_of(e.panel.owner))}}, now);
            },
            [&](const PanelHidden& e) {
              emit(MessageType::PanelHide, e.panel.viewer,
                   Json{{"panel_id", e.panel.panel_id},
                        {"owner", e.panel.owner.str()},
                        {"viewer", e.panel.viewer.str()},
                        {"kind", to_string(e.panel.kind)}},
                   now);
            },
            [&](const ModeChanged& e) {
              emit(MessageType::ModeChange, e.user,
                   Json{{"user", e.user.str()}, {"mode", to_string(e.mode)}}, now);
            },
            [&](const SummaryDelivered& e) {
              emit(MessageType::SummaryReady, e.viewer,
                   Json{{"panel_id", e.panel_id},
                        {"viewer", e.viewer.str()},
                        {"kind", to_string(e.kind)},
                        {"speaker", nullptr},
                        {"utterance_id", nullptr},
                        {"summary", to_json(e.summary)}},
                   now);
            },
            [&](const Notice& e) {
              emit(MessageType::Error, e.user, Json{{"code", e.code}, {"message", e.message}}, now);
            },
        },
        effect);
  }
  fx.clear();
}

void Session::emit(MessageType type, std::optional<ParticipantId> to, Json payload, Timestamp now) {
  WireMessage m;
  m.type = type;
  m.t_ms = now;
  m.to = std::move(to);
  m.payload = std::move(payload);
  outbox_.push_back(std::move(m));
}

std::string Session::color_of(const ParticipantId& p) const {
  auto it = participants_.find(p);
  return it == participants_.end() ? std::string{} : it->second.color;
}

UtteranceSegmenter& Session::segmenter_for(const ParticipantId& speaker) {
  auto it = segmenters_.find(speaker);
  if (it == segmenters_.end()) {
    it = segmenters_.emplace(speaker, UtteranceSegmenter(speaker, config_.pause_threshold_ms)).first;
  }
  return it->second;
}

std::vector<WireMessage> Session::take_outbox() {
  std::vector<WireMessage> out;
  out.swap(outbox_);
  for (auto& m : out) m.seq = next_seq_++;
  return out;
}

std::vector<WireMessage> Session::error_message(const Error& e,
                                                const std::optional<ParticipantId>& to) {
  outbox_.clear();
  emit(MessageType::Error, to, Json{{"code", to_string(e.code())}, {"message", e.what()}},
       clock_.now());
  return take_outbox();
}

}  // namespace catchup
