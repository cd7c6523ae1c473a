#include "catchup/engagement.hpp"

#include "catchup/error.hpp"

#include <algorithm>
#include <tuple>

namespace catchup {

void FsmConfig::validate() const {
  auto positive = [](std::int64_t v, const char* field) {
    if (v <= 0) {
      throw Error(ErrorCode::BadConfig,
                  std::string(field) + " must be positive, got " + std::to_string(v));
    }
  };
  positive(fade_after_ms, "fade_after_ms");
  positive(read_after_gaze_ms, "read_after_gaze_ms");
  positive(lookback_grace_ms, "lookback_grace_ms");
  positive(disengage_after_ms, "disengage_after_ms");
  positive(engagement_summary_words, "engagement_summary_words");
  positive(reengagement_summary_words, "reengagement_summary_words");
}

std::string_view to_string(UserContext::Kind k) {
  switch (k) {
    case UserContext::Kind::FocusedOnSpeaker: return "FocusedOnSpeaker";
    case UserContext::Kind::FocusedOnListener: return "FocusedOnListener";
    case UserContext::Kind::Unfocused: return "Unfocused";
    case UserContext::Kind::Disengaged: return "Disengaged";
    case UserContext::Kind::ReEngaging: return "ReEngaging";
  }
  return "?";
}

Indicator indicator_for(PanelKind kind) {
  switch (kind) {
    case PanelKind::Live: return Indicator::NoCircle;
    case PanelKind::EngagementSummary: return Indicator::GreenCircle;
    case PanelKind::ReEngagementSummary: return Indicator::OrangeCircle;
  }
  return Indicator::NoCircle;
}

std::string_view to_string(PanelKind k) {
  switch (k) {
    case PanelKind::Live: return "Live";
    case PanelKind::EngagementSummary: return "EngagementSummary";
    case PanelKind::ReEngagementSummary: return "ReEngagementSummary";
  }
  return "?";
}

std::string_view to_string(Indicator i) {
  switch (i) {
    case Indicator::NoCircle: return "NoCircle";
    case Indicator::GreenCircle: return "GreenCircle";
    case Indicator::OrangeCircle: return "OrangeCircle";
  }
  return "?";
}

std::string_view to_string(PanelState s) {
  switch (s) {
    case PanelState::Visible: return "Visible";
    case PanelState::Read: return "Read";
    case PanelState::Hidden: return "Hidden";
  }
  return "?";
}

PanelKind parse_panel_kind(std::string_view s) {
  if (s == "Live") return PanelKind::Live;
  if (s == "EngagementSummary") return PanelKind::EngagementSummary;
  if (s == "ReEngagementSummary") return PanelKind::ReEngagementSummary;
  throw Error(ErrorCode::MalformedPayload, "unknown panel kind '" + std::string(s) + "'");
}

Indicator parse_indicator(std::string_view s) {
  if (s == "NoCircle") return Indicator::NoCircle;
  if (s == "GreenCircle") return Indicator::GreenCircle;
  if (s == "OrangeCircle") return Indicator::OrangeCircle;
  throw Error(ErrorCode::MalformedPayload, "unknown indicator '" + std::string(s) + "'");
}

PanelState parse_panel_state(std::string_view s) {
  if (s == "Visible") return PanelState::Visible;
  if (s == "Read") return PanelState::Read;
  if (s == "Hidden") return PanelState::Hidden;
  throw Error(ErrorCode::MalformedPayload, "unknown panel state '" + std::string(s) + "'");
}

UserContext classify_context(const ParticipantId& user, const GazeSample& latest_gaze,
                             const std::set<ParticipantId>& speaking,
                             Timestamp elapsed_since_avatar_or_object_gaze_ms,
                             const FsmConfig& config, Mode mode,
                             const std::set<ParticipantId>* members) {
  if (latest_gaze.user != user) {
    throw Error(ErrorCode::InvalidRequest, "gaze sample belongs to " + latest_gaze.user.str() +
                                               ", not " + user.str());
  }
  const GazeTarget& target = latest_gaze.target;
  if (target.anchored()) {
    if (target.participant == user) {
      throw Error(ErrorCode::UnknownTarget, user.str() + " cannot gaze at their own avatar");
    }
    if (members && !members->contains(target.participant)) {
      throw Error(ErrorCode::UnknownTarget, "gaze target " + target.participant.str() +
                                                " is not a session member");
    }
  }

  if (mode == Mode::ReEngagement && !target.is_none()) {
    return {UserContext::Kind::ReEngaging, {}};
  }
  switch (target.kind) {
    case GazeTarget::Kind::Avatar:
    case GazeTarget::Kind::Panel:
      if (speaking.contains(target.participant)) {
        return {UserContext::Kind::FocusedOnSpeaker, target.participant};
      }
      return {UserContext::Kind::FocusedOnListener, target.participant};
    case GazeTarget::Kind::Table:
    case GazeTarget::Kind::Object:
      return {UserContext::Kind::Unfocused, {}};
    case GazeTarget::Kind::None:
      if (elapsed_since_avatar_or_object_gaze_ms >= config.disengage_after_ms) {
        return {UserContext::Kind::Disengaged, {}};
      }
      return {UserContext::Kind::Unfocused, {}};
  }
  return {};
}

UserEngagement::UserEngagement(ParticipantId user, InterfaceMode iface, FsmConfig config,
                               const MeetingView& view, SummaryPort& summaries,
                               PanelIdSource next_panel_id)
    : user_(std::move(user)),
      iface_(iface),
      config_(config),
      view_(view),
      summaries_(summaries),
      next_panel_id_(std::move(next_panel_id)) {
  config_.validate();
}

std::optional<ParticipantId> UserEngagement::focused_owner() const {
  if (!present_ || !latest_gaze_) return std::nullopt;
  return latest_gaze_->target.anchor();
}

std::vector<Panel> UserEngagement::visible_panels() const {
  std::vector<Panel> out;
  out.reserve(panels_.size());
  for (const auto& [owner, panel] : panels_) out.push_back(panel);
  return out;
}

const Panel* UserEngagement::panel_on(const ParticipantId& owner) const {
  auto it = panels_.find(owner);
  return it == panels_.end() ? nullptr : &it->second;
}

void UserEngagement::on_join(Timestamp now, FsmEffects& fx) {
  present_ = true;
  if (iface_ == InterfaceMode::AvatarTI) rebuild_avatar_panels(now, fx);
  refresh_context(now);
}

void UserEngagement::on_gaze(const GazeSample& sample, FsmEffects& fx) {
  if (!present_) return;
  const Timestamp now = sample.t_ms;
  const auto before = focused_owner();
  const auto after = sample.target.anchor();

  if (before != after) {
    if (before) {
      if (auto it = panels_.find(*before); it != panels_.end()) {
        Panel& p = it->second;
        p.last_gazed_ms = now;
        p.dwell_start_ms.reset();
        if (p.state == PanelState::Read) {
          p.left_ms = now;
        } else {
          p.gaze_accum_ms = 0;
        }
      }
    }
    if (after) {
      if (auto it = panels_.find(*after); it != panels_.end()) {
        Panel& p = it->second;
        p.dwell_start_ms = now;
        p.gaze_accum_ms = 0;
        p.last_gazed_ms = now;
        if (p.state == PanelState::Read && p.left_ms) {
          if (now - *p.left_ms <= config_.lookback_grace_ms) {
            p.left_ms.reset();
          } else {
            hide_panel(*after, fx);
          }
        }
      }
    }
  }

  if (sample.target.is_none()) {
    if (!latest_gaze_ || !latest_gaze_->target.is_none()) none_since_ = now;
  } else {
    none_since_.reset();
  }
  latest_gaze_ = sample;

  if (window_ && !closing_ && trigger_ == WindowTrigger::Gaze && !sample.target.is_none()) {
    begin_reengage(now, fx);
  }
  check_all_read(now, fx);
  refresh_context(now);
}

void UserEngagement::on_pinch(Timestamp now, FsmEffects& fx) {
  if (!present_) return;
  ++pinches_;

  switch (iface_) {
    case InterfaceMode::TableTI:
      table_summary_view_ = !table_summary_view_;
      return;
    case InterfaceMode::AvatarTI:
      avatar_summary_view_ = !avatar_summary_view_;
      hide_all_panels(fx);
      rebuild_avatar_panels(now, fx);
      return;
    case InterfaceMode::EngageSync:
      break;
  }

  // Live requests wait until every missed summary has been read.
  if (mode_ == Mode::ReEngagement || window_) return;
  refresh_context(now);
  const bool on_speaker = context_.kind == UserContext::Kind::FocusedOnSpeaker;
  const bool on_listener = context_.kind == UserContext::Kind::FocusedOnListener;
  if (!on_speaker && !on_listener) return;

  const ParticipantId target = context_.participant;
  if (panels_.contains(target)) {
    hide_panel(target, fx);
    return;
  }
  if (on_speaker) {
    show_panel(target, PanelKind::Live, view_.partial_text(target), now, fx);
    return;
  }
  auto last = view_.last_utterance(target);
  if (!last) {
    fx.push_back(Notice{user_, "NoPriorUtterance", target.str() + " has not spoken yet"});
    return;
  }
  SummaryRequest req;
  req.kind = SummaryKind::UtteranceSummary;
  req.source = {*last};
  req.word_limit = config_.engagement_summary_words;
  req.speaker = target;
  show_summary_panel(target, PanelKind::EngagementSummary, std::move(req), now, fx, std::nullopt);
}

void UserEngagement::on_presence(PresenceKind kind, Timestamp now, FsmEffects& fx) {
  switch (kind) {
    case PresenceKind::Join:
      on_join(now, fx);
      return;
    case PresenceKind::Dropout:
      present_ = false;
      latest_gaze_.reset();
      none_since_.reset();
      if (iface_ != InterfaceMode::AvatarTI) {
        if (mode_ == Mode::ReEngagement) {
          hide_all_panels(fx);
          check_all_read(now, fx);
        }
        if (window_ && closing_) {
          // Rejoined and left again before the window resolved: keep recording.
          window_->end_ms.reset();
          closing_ = false;
          trigger_ = WindowTrigger::Dropout;
        } else if (!window_) {
          on_disengage(now, fx);
          trigger_ = WindowTrigger::Dropout;
        }
      }
      refresh_context(now);
      return;
    case PresenceKind::Rejoin:
      present_ = true;
      if (window_ && !closing_) begin_reengage(now, fx);
      if (iface_ == InterfaceMode::AvatarTI) rebuild_avatar_panels(now, fx);
      refresh_context(now);
      return;
  }
}

void UserEngagement::on_member_presence(const ParticipantId& other, bool present, Timestamp now,
                                        FsmEffects& fx) {
  if (other == user_) return;
  if (!present) {
    auto it = panels_.find(other);
    if (it != panels_.end() && it->second.kind != PanelKind::ReEngagementSummary) hide_panel(other, fx);
    return;
  }
  if (iface_ == InterfaceMode::AvatarTI && !panels_.contains(other)) {
    show_panel(other, avatar_panel_kind(), avatar_panel_text(other), now, fx);
  }
}

void UserEngagement::on_utterance(const Utterance& u, FsmEffects& /*fx*/) {
  if (u.speaker == user_ || !window_) return;
  const Timestamp lo = window_->start_ms;
  if (u.end_ms < lo) return;
  if (window_->end_ms && u.end_ms > *window_->end_ms) return;
  window_utterances_.push_back(u);
  window_->utterance_ids.push_back(u.utterance_id);
}

void UserEngagement::on_utterance_summary(const ParticipantId& speaker, const std::string& text,
                                          FsmEffects& fx) {
  if (iface_ != InterfaceMode::AvatarTI || !avatar_summary_view_) return;
  auto it = panels_.find(speaker);
  if (it == panels_.end() || it->second.kind != PanelKind::EngagementSummary) return;
  if (it->second.text == text) return;
  it->second.text = text;
  fx.push_back(PanelUpdated{it->second});
}

void UserEngagement::live_caption_update(const ParticipantId& speaker,
                                         const std::string& partial_text, FsmEffects& fx) {
  auto it = panels_.find(speaker);
  if (it == panels_.end() || it->second.kind != PanelKind::Live) return;
  if (it->second.text == partial_text) return;
  it->second.text = partial_text;
  fx.push_back(PanelUpdated{it->second});
}

void UserEngagement::tick(Timestamp now, FsmEffects& fx) {
  if (iface_ == InterfaceMode::EngageSync) {
    const auto gazed_owner = focused_owner();
    std::vector<ParticipantId> to_hide;
    for (auto& [owner, p] : panels_) {
      if (gazed_owner == owner) {
        p.last_gazed_ms = now;
        if (p.dwell_start_ms) p.gaze_accum_ms = now - *p.dwell_start_ms;
        if (p.kind == PanelKind::ReEngagementSummary && p.state == PanelState::Visible &&
            p.gaze_accum_ms >= config_.read_after_gaze_ms) {
          p.state = PanelState::Read;
          fx.push_back(PanelUpdated{p});
        }
        continue;
      }
      if (p.kind != PanelKind::ReEngagementSummary) {
        if (now - p.last_gazed_ms > config_.fade_after_ms) to_hide.push_back(owner);
      } else if (p.state == PanelState::Read && p.left_ms &&
                 now - *p.left_ms > config_.lookback_grace_ms) {
        to_hide.push_back(owner);
      }
    }
    for (const auto& owner : to_hide) hide_panel(owner, fx);
    check_all_read(now, fx);
  }

  if (window_ && closing_ && now > *window_->end_ms &&
      !view_.speech_unresolved_through(*window_->end_ms, user_)) {
    on_reengage(now, fx);
  }

  if (iface_ != InterfaceMode::AvatarTI && mode_ == Mode::Engagement && present_ && !window_ &&
      latest_gaze_ && none_since_ && now - *none_since_ >= config_.disengage_after_ms) {
    on_disengage(now, fx);
    trigger_ = WindowTrigger::Gaze;
  }
  refresh_context(now);
}

void UserEngagement::apply_summary(const std::string& panel_id, SummaryKind kind,
                                   const Summary& summary, FsmEffects& fx) {
  for (auto& [owner, p] : panels_) {
    if (p.panel_id == panel_id) {
      p.text = summary.text;
      p.summary_pending = false;
      break;
    }
  }
  fx.push_back(SummaryDelivered{panel_id, user_, kind, summary});
}

void UserEngagement::on_disengage(Timestamp now, FsmEffects& fx) {
  if (window_ || iface_ == InterfaceMode::AvatarTI || mode_ != Mode::Engagement) return;
  window_ = MissedWindow{user_, now, std::nullopt, {}};
  closing_ = false;
  window_utterances_.clear();
  hide_all_panels(fx);
  context_ = {UserContext::Kind::Disengaged, {}};
}

void UserEngagement::begin_reengage(Timestamp now, FsmEffects& /*fx*/) {
  if (!window_ || closing_) return;
  window_->end_ms = now;
  closing_ = true;
  context_ = {UserContext::Kind::ReEngaging, {}};
}

void UserEngagement::on_reengage(Timestamp now, FsmEffects& fx) {
  if (!window_) throw Error(ErrorCode::ProtocolError, user_.str() + " has no open missed window");
  if (!window_->end_ms) window_->end_ms = now;

  std::stable_sort(window_utterances_.begin(), window_utterances_.end(),
                   [](const Utterance& a, const Utterance& b) {
                     return std::tie(a.end_ms, a.seq) < std::tie(b.end_ms, b.seq);
                   });
  MissedWindow closed = std::move(*window_);
  window_.reset();
  closing_ = false;
  closed.utterance_ids.clear();
  for (const auto& u : window_utterances_) closed.utterance_ids.push_back(u.utterance_id);
  closed_windows_.push_back(std::move(closed));
  const std::size_t window_index = closed_windows_.size() - 1;

  if (iface_ == InterfaceMode::EngageSync && !window_utterances_.empty()) {
    // One request per speaker, ordered by each speaker's first missed utterance.
    std::vector<ParticipantId> order;
    std::map<ParticipantId, std::vector<Utterance>> by_speaker;
    for (const auto& u : window_utterances_) {
      auto& bucket = by_speaker[u.speaker];
      if (bucket.empty()) order.push_back(u.speaker);
      bucket.push_back(u);
    }
    // Speakers who have since left keep their panel on the empty seat, so no
    // missed content is dropped.
    hide_all_panels(fx);
    for (const auto& speaker : order) {
      SummaryRequest req;
      req.kind = SummaryKind::ReEngagementSummary;
      req.source = std::move(by_speaker[speaker]);
      req.word_limit = config_.reengagement_summary_words;
      req.speaker = speaker;
      show_summary_panel(speaker, PanelKind::ReEngagementSummary, std::move(req), now, fx,
                         window_index);
    }
    set_mode(Mode::ReEngagement, fx);
  }
  window_utterances_.clear();
  refresh_context(now);
}

bool UserEngagement::check_all_read(Timestamp /*now*/, FsmEffects& fx) {
  if (mode_ != Mode::ReEngagement) return false;
  for (const auto& [owner, p] : panels_) {
    if (p.kind == PanelKind::ReEngagementSummary && p.state == PanelState::Visible) return false;
  }
  std::vector<ParticipantId> remaining;
  for (const auto& [owner, p] : panels_) {
    if (p.kind == PanelKind::ReEngagementSummary) remaining.push_back(owner);
  }
  for (const auto& owner : remaining) hide_panel(owner, fx);
  set_mode(Mode::Engagement, fx);
  return true;
}

void UserEngagement::refresh_context(Timestamp now) {
  if (!present_ || (window_ && !closing_)) {
    context_ = {UserContext::Kind::Disengaged, {}};
    return;
  }
  if (window_ && closing_) {
    context_ = {UserContext::Kind::ReEngaging, {}};
    return;
  }
  if (!latest_gaze_) {
    context_ = mode_ == Mode::ReEngagement ? UserContext{UserContext::Kind::ReEngaging, {}}
                                           : UserContext{UserContext::Kind::Unfocused, {}};
    return;
  }
  const Timestamp elapsed = none_since_ ? now - *none_since_ : 0;
  context_ = classify_context(user_, *latest_gaze_, view_.speaking(), elapsed, config_, mode_);
}

void UserEngagement::set_mode(Mode m, FsmEffects& fx) {
  if (mode_ == m) return;
  mode_ = m;
  ++mode_changes_;
  fx.push_back(ModeChanged{user_, m});
}

Panel& UserEngagement::show_panel(const ParticipantId& owner, PanelKind kind, std::string text,
                                  Timestamp now, FsmEffects& fx) {
  if (panels_.contains(owner)) hide_panel(owner, fx);
  Panel p;
  p.panel_id = next_panel_id_();
  p.owner = owner;
  p.viewer = user_;
  p.kind = kind;
  p.indicator = indicator_for(kind);
  p.text = std::move(text);
  p.created_ms = now;
  p.last_gazed_ms = now;
  if (focused_owner() == owner) p.dwell_start_ms = now;
  ++panels_shown_;
  auto [it, inserted] = panels_.emplace(owner, std::move(p));
  fx.push_back(PanelShown{it->second});
  return it->second;
}

void UserEngagement::show_summary_panel(const ParticipantId& owner, PanelKind kind,
                                        SummaryRequest request, Timestamp now, FsmEffects& fx,
                                        std::optional<std::size_t> window_index) {
  if (panels_.contains(owner)) hide_panel(owner, fx);
  const std::string panel_id = next_panel_id_();
  const SummaryKind summary_kind = request.kind;
  std::optional<Summary> ready = summaries_.dispatch(panel_id, user_, request);

  Panel p;
  p.panel_id = panel_id;
  p.owner = owner;
  p.viewer = user_;
  p.kind = kind;
  p.indicator = indicator_for(kind);
  p.created_ms = now;
  p.last_gazed_ms = now;
  p.source_ids = request.source_ids();
  p.summary_pending = !ready;
  if (ready) p.text = ready->text;
  if (focused_owner() == owner) p.dwell_start_ms = now;
  if (window_index) {
    reengagement_records_.push_back({*window_index, panel_id, owner, p.source_ids});
  }
  ++panels_shown_;
  auto [it, inserted] = panels_.emplace(owner, std::move(p));
  fx.push_back(PanelShown{it->second});
  if (ready) fx.push_back(SummaryDelivered{panel_id, user_, summary_kind, *ready});
}

void UserEngagement::hide_panel(const ParticipantId& owner, FsmEffects& fx) {
  auto it = panels_.find(owner);
  if (it == panels_.end()) return;
  it->second.state = PanelState::Hidden;
  fx.push_back(PanelHidden{std::move(it->second)});
  panels_.erase(it);
}

void UserEngagement::hide_all_panels(FsmEffects& fx) {
  while (!panels_.empty()) hide_panel(panels_.begin()->first, fx);
}

PanelKind UserEngagement::avatar_panel_kind() const {
  return avatar_summary_view_ ? PanelKind::EngagementSummary : PanelKind::Live;
}

std::string UserEngagement::avatar_panel_text(const ParticipantId& owner) const {
  if (avatar_summary_view_) return view_.latest_summary_text(owner).value_or("");
  return view_.partial_text(owner);
}

void UserEngagement::rebuild_avatar_panels(Timestamp now, FsmEffects& fx) {
  for (const auto& other : view_.present_members()) {
    if (other == user_ || panels_.contains(other)) continue;
    show_panel(other, avatar_panel_kind(), avatar_panel_text(other), now, fx);
  }
}

}  // namespace catchup
