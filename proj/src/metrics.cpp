#include "catchup/metrics.hpp"

#include "catchup/error.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace catchup {

namespace {

std::vector<Interval> merge(std::vector<Interval> v, Timestamp lo, Timestamp hi) {
  for (auto& [a, b] : v) {
    a = std::clamp(a, lo, hi);
    b = std::clamp(b, lo, hi);
  }
  std::sort(v.begin(), v.end());
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (iv.second <= iv.first) continue;
    if (!out.empty() && iv.first <= out.back().second) {
      out.back().second = std::max(out.back().second, iv.second);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

Timestamp overlap(const std::vector<Interval>& merged, Timestamp a, Timestamp b) {
  Timestamp total = 0;
  for (const auto& [x, y] : merged) {
    const Timestamp lo = std::max(a, x), hi = std::min(b, y);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

template <class F>
void for_each_out(const EventLog& log, F&& f) {
  for (const auto& r : log.records) {
    if (const auto* o = std::get_if<OutRecord>(&r)) f(o->msg);
  }
}

struct PresenceMark {
  Timestamp t;
  PresenceKind kind;
};

std::vector<PresenceMark> presence_of(const EventLog& log, const ParticipantId& user) {
  std::vector<PresenceMark> out;
  for_each_out(log, [&](const WireMessage& m) {
    if (m.type != MessageType::PresenceEvent) return;
    if (m.payload.value("user", "") != user.str()) return;
    out.push_back({m.t_ms, parse_presence_kind(m.payload.at("kind").get<std::string>())});
  });
  return out;
}

std::optional<Timestamp> first_rejoin(const EventLog& log, const ParticipantId& user) {
  for (const auto& p : presence_of(log, user)) {
    if (p.kind == PresenceKind::Rejoin) return p.t;
  }
  return std::nullopt;
}

std::optional<Timestamp> caught_up_after(const EventLog& log, const ParticipantId& user,
                                         Timestamp t) {
  for (const auto& r : log.records) {
    const auto* m = std::get_if<MarkRecord>(&r);
    if (m && m->event == "CaughtUp" && m->user == user && m->t_ms >= t) return m->t_ms;
  }
  return std::nullopt;
}

std::map<ParticipantId, std::string> roles_of(const EventLog& log) {
  std::map<ParticipantId, std::string> out;
  const Json& run = log.header.run;
  if (run.is_object() && run.contains("agents")) {
    for (const auto& a : run.at("agents")) {
      out[ParticipantId(a.at("id").get<std::string>())] = a.at("role").get<std::string>();
    }
  }
  return out;
}

std::vector<Utterance> missed_in(const EventLog& log, const ParticipantId& user,
                                 const Interval& window) {
  std::vector<Utterance> out;
  for_each_out(log, [&](const WireMessage& m) {
    if (m.type != MessageType::UtteranceFinal) return;
    Utterance u = utterance_from_json(m.payload);
    if (u.speaker != user && u.end_ms >= window.first && u.end_ms <= window.second) {
      out.push_back(std::move(u));
    }
  });
  return out;
}

}  // namespace

GazeClass classify_gaze(const GazeTarget& t) {
  switch (t.kind) {
    case GazeTarget::Kind::Avatar: return GazeClass::Avatar;
    case GazeTarget::Kind::Panel:
    case GazeTarget::Kind::Table: return GazeClass::Interface;
    default: return GazeClass::Other;
  }
}

GazeSplit gaze_split(const std::vector<GazeSample>& samples, Timestamp trial_start,
                     Timestamp trial_end, const std::vector<Interval>& excluded) {
  if (trial_end < trial_start) {
    throw Error(ErrorCode::InvalidRequest, "trial ends before it starts");
  }
  std::vector<GazeSample> sorted = samples;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const GazeSample& a, const GazeSample& b) { return a.t_ms < b.t_ms; });
  const auto ex = merge(excluded, trial_start, trial_end);

  GazeSplit s;
  s.counted_ms = (trial_end - trial_start) - overlap(ex, trial_start, trial_end);
  auto add = [&](GazeClass c, Timestamp a, Timestamp b) {
    a = std::max(a, trial_start);
    b = std::min(b, trial_end);
    if (b <= a) return;
    const Timestamp ms = (b - a) - overlap(ex, a, b);
    switch (c) {
      case GazeClass::Avatar: s.avatar_ms += ms; break;
      case GazeClass::Interface: s.interface_ms += ms; break;
      case GazeClass::Other: s.other_ms += ms; break;
    }
  };
  add(GazeClass::Other, trial_start, sorted.empty() ? trial_end : sorted.front().t_ms);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Timestamp until = i + 1 < sorted.size() ? sorted[i + 1].t_ms : trial_end;
    add(classify_gaze(sorted[i].target), sorted[i].t_ms, until);
  }
  if (s.counted_ms > 0) {
    s.pct_avatars = 100.0 * static_cast<double>(s.avatar_ms) / static_cast<double>(s.counted_ms);
    s.pct_interface =
        100.0 * static_cast<double>(s.interface_ms) / static_cast<double>(s.counted_ms);
  }
  return s;
}

std::vector<Interval> absence_intervals(const EventLog& log, const ParticipantId& user) {
  std::vector<Interval> out;
  std::optional<Timestamp> open;
  for (const auto& p : presence_of(log, user)) {
    if (p.kind == PresenceKind::Dropout && !open) {
      open = p.t;
    } else if (p.kind == PresenceKind::Rejoin && open) {
      out.emplace_back(*open, p.t);
      open.reset();
    }
  }
  if (open) out.emplace_back(*open, log.end_ms);
  return out;
}

std::vector<GazeSample> gaze_samples(const EventLog& log, const ParticipantId& user) {
  std::vector<GazeSample> out;
  for (const auto& r : log.records) {
    const auto* in = std::get_if<InRecord>(&r);
    if (!in) continue;
    const auto* ev = std::get_if<SessionEvent>(&in->msg);
    if (!ev) continue;
    if (const auto* g = std::get_if<GazeSample>(ev); g && g->user == user) out.push_back(*g);
  }
  return out;
}

GazeSplit compute_gaze_split(const EventLog& log, const ParticipantId& user) {
  return gaze_split(gaze_samples(log, user), 0, log.end_ms, absence_intervals(log, user));
}

Timestamp compute_reengagement_time(const EventLog& log, const ParticipantId& user) {
  const auto rejoin = first_rejoin(log, user);
  if (!rejoin) throw Error(ErrorCode::NoRejoinFound, "no rejoin for " + user.str() + " in log");

  if (log.header.session.interface_mode != InterfaceMode::EngageSync) {
    return caught_up_after(log, user, *rejoin).value_or(log.end_ms) - *rejoin;
  }

  std::optional<Timestamp> next_dropout;
  for (const auto& p : presence_of(log, user)) {
    if (p.kind == PresenceKind::Dropout && p.t > *rejoin) {
      next_dropout = p.t;
      break;
    }
  }
  bool entered = false;
  std::optional<Timestamp> done;
  for_each_out(log, [&](const WireMessage& m) {
    if (done || m.type != MessageType::ModeChange || m.to != user || m.t_ms < *rejoin) return;
    const std::string mode = m.payload.at("mode").get<std::string>();
    if (!entered) {
      if (mode == "ReEngagement" && (!next_dropout || m.t_ms < *next_dropout)) entered = true;
    } else if (mode == "Engagement") {
      done = m.t_ms;
    }
  });
  if (!entered) return 0;
  return done.value_or(log.end_ms) - *rejoin;
}

std::vector<Utterance> missed_utterances(const EventLog& log, const ParticipantId& user) {
  std::vector<Utterance> out;
  for (const auto& w : absence_intervals(log, user)) {
    auto part = missed_in(log, user, w);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

double missed_utterance_coverage(const EventLog& log, const ParticipantId& user) {
  const InterfaceMode mode = log.header.session.interface_mode;
  if (mode == InterfaceMode::AvatarTI) return 0.0;
  const auto missed = missed_utterances(log, user);
  if (missed.empty()) return 1.0;

  if (mode == InterfaceMode::TableTI) {
    const auto rejoin = first_rejoin(log, user);
    return rejoin && caught_up_after(log, user, *rejoin) ? 1.0 : 0.0;
  }

  std::set<std::string> covered;
  for_each_out(log, [&](const WireMessage& m) {
    if (m.type != MessageType::SummaryReady || m.to != user) return;
    if (m.payload.value("kind", "") != "ReEngagementSummary") return;
    for (const auto& id : m.payload.at("summary").at("source_ids")) {
      covered.insert(id.get<std::string>());
    }
  });
  std::size_t hit = 0;
  for (const auto& u : missed) hit += covered.contains(u.utterance_id) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(missed.size());
}

std::vector<RecallRow> recall_window_report(const EventLog& log, const ParticipantId& user,
                                            std::size_t window) {
  const auto absences = absence_intervals(log, user);
  if (window >= absences.size()) {
    throw Error(ErrorCode::ProtocolError, "no closed window " + std::to_string(window) + " for " +
                                              user.str());
  }
  const Interval w = absences[window];
  const auto roles = roles_of(log);
  const InterfaceMode mode = log.header.session.interface_mode;

  std::vector<RecallRow> rows;
  for (const auto& u : missed_in(log, user, w)) {
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const RecallRow& r) { return r.speaker == u.speaker; });
    if (it == rows.end()) {
      RecallRow row;
      row.speaker = u.speaker;
      auto role = roles.find(u.speaker);
      row.role = role == roles.end() ? std::string{} : role->second;
      row.less_talkative = row.role == "less_talkative";
      rows.push_back(row);
      it = rows.end() - 1;
    }
    ++it->missed_utterances;
  }

  if (mode == InterfaceMode::TableTI) {
    const bool caught = caught_up_after(log, user, w.second).has_value();
    for (auto& r : rows) r.surfaced = caught;
  } else if (mode == InterfaceMode::EngageSync) {
    std::map<std::string, ParticipantId> shown;  // orange panel id -> owner
    std::set<ParticipantId> read;
    for_each_out(log, [&](const WireMessage& m) {
      if (m.to != user || m.t_ms < w.second) return;
      if (m.type != MessageType::PanelShow && m.type != MessageType::PanelUpdate) return;
      const Json& p = m.payload.at("panel");
      if (p.at("kind").get<std::string>() != "ReEngagementSummary") return;
      const std::string id = p.at("panel_id").get<std::string>();
      const ParticipantId owner(p.at("owner").get<std::string>());
      if (m.type == MessageType::PanelShow) shown.emplace(id, owner);
      if (shown.contains(id) && p.at("state").get<std::string>() == "Read") read.insert(owner);
    });
    for (auto& r : rows) r.surfaced = read.contains(r.speaker);
  }
  return rows;
}

std::string plot_data_tsv(const EventLog& log, const ParticipantId& user) {
  std::ostringstream out;
  out << "t_ms\tgaze_kind\tgaze_target\tvisible_panels\torange_panels\tmode\tpresent\n";
  GazeTarget gaze;
  std::map<std::string, std::string> visible;  // panel id -> kind
  std::string mode = "Engagement";
  bool present = false;
  bool joined = false;
  for (const auto& r : log.records) {
    if (const auto* in = std::get_if<InRecord>(&r)) {
      if (const auto* ev = std::get_if<SessionEvent>(&in->msg)) {
        if (const auto* g = std::get_if<GazeSample>(ev); g && g->user == user) gaze = g->target;
      }
    } else if (const auto* o = std::get_if<OutRecord>(&r)) {
      const WireMessage& m = o->msg;
      if (m.type == MessageType::PresenceEvent && m.payload.value("user", "") == user.str()) {
        const auto kind = parse_presence_kind(m.payload.at("kind").get<std::string>());
        present = kind != PresenceKind::Dropout;
        joined = true;
      }
      if (m.to != user) continue;
      if (m.type == MessageType::PanelShow || m.type == MessageType::PanelUpdate) {
        const Json& p = m.payload.at("panel");
        visible[p.at("panel_id").get<std::string>()] = p.at("kind").get<std::string>();
      } else if (m.type == MessageType::PanelHide) {
        visible.erase(m.payload.at("panel_id").get<std::string>());
      } else if (m.type == MessageType::ModeChange) {
        mode = m.payload.at("mode").get<std::string>();
      }
    } else if (const auto* c = std::get_if<ClockRecord>(&r)) {
      if (!joined) continue;
      std::size_t orange = 0;
      for (const auto& [id, kind] : visible) orange += kind == "ReEngagementSummary" ? 1 : 0;
      out << c->t_ms << '\t' << to_string(gaze.kind) << '\t'
          << (gaze.anchored() ? gaze.participant.str() : "-") << '\t' << visible.size() << '\t'
          << orange << '\t' << mode << '\t' << (present ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

}  // namespace catchup
