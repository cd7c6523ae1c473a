#include "catchup/report.hpp"

#include "catchup/error.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace catchup {

namespace {

std::optional<ParticipantId> default_subject(const EventLog& log) {
  const Json& run = log.header.run;
  if (run.is_object() && run.contains("subject")) {
    return ParticipantId(run.at("subject").get<std::string>());
  }
  std::set<std::string> agents;
  for (const auto& r : log.records) {
    const auto* o = std::get_if<OutRecord>(&r);
    if (!o || o->msg.type != MessageType::PresenceEvent) continue;
    const Json& p = o->msg.payload;
    if (p.value("agent", false)) agents.insert(p.value("user", ""));
    if (p.value("kind", "") == "Dropout" && !agents.contains(p.value("user", ""))) {
      return ParticipantId(p.at("user").get<std::string>());
    }
  }
  return std::nullopt;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

RunReport compute_report(const EventLog& log, std::optional<ParticipantId> subject) {
  RunReport r;
  if (!subject) subject = default_subject(log);
  if (!subject) {
    throw Error(ErrorCode::InvalidRequest, "log names no subject; pass one explicitly");
  }
  r.subject = *subject;
  r.interface_mode = log.header.session.interface_mode;
  r.run = log.header.run;

  std::set<std::string> others;
  for (const auto& rec : log.records) {
    if (const auto* o = std::get_if<OutRecord>(&rec)) {
      const WireMessage& m = o->msg;
      if (m.type == MessageType::PresenceEvent && m.payload.value("kind", "") == "Join" &&
          m.payload.value("user", "") != r.subject.str()) {
        others.insert(m.payload.value("user", ""));
      }
      if (m.type == MessageType::PanelShow && m.to == r.subject &&
          m.payload.at("panel").at("kind").get<std::string>() == "ReEngagementSummary") {
        ++r.orange_panels;
      }
      if (m.type == MessageType::MetricsSnapshot) r.latency = m.payload.at("latency");
    } else if (const auto* in = std::get_if<InRecord>(&rec)) {
      const auto* ev = std::get_if<SessionEvent>(&in->msg);
      if (!ev) continue;
      if (const auto* p = std::get_if<PinchEvent>(ev); p && p->user == r.subject) {
        ++r.interaction_count;
      }
    }
  }
  r.group_size = others.size();

  const bool engage = r.interface_mode == InterfaceMode::EngageSync;
  r.reengagement_measure = engage ? "rejoin to return to Engagement mode"
                                  : "rejoin to caught-up mark (reading-rate proxy)";
  try {
    r.reengagement_time_ms = compute_reengagement_time(log, r.subject);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoRejoinFound) throw;
  }

  const GazeSplit g = compute_gaze_split(log, r.subject);
  r.gaze_pct_avatars = g.pct_avatars;
  r.gaze_pct_interface = g.pct_interface;
  r.missed_utterance_coverage = missed_utterance_coverage(log, r.subject);

  const auto missed = missed_utterances(log, r.subject);
  r.missed_utterances = missed.size();
  std::set<ParticipantId> speakers;
  for (const auto& u : missed) speakers.insert(u.speaker);
  r.speakers_in_window = speakers.size();
  if (!absence_intervals(log, r.subject).empty()) {
    r.recall = recall_window_report(log, r.subject, 0);
  }
  return r;
}

Json to_json(const RunReport& r) {
  Json recall = Json::array();
  for (const auto& row : r.recall) {
    recall.push_back(Json{{"speaker", row.speaker.str()},
                          {"role", row.role},
                          {"missed_utterances", row.missed_utterances},
                          {"surfaced", row.surfaced},
                          {"less_talkative", row.less_talkative}});
  }
  return Json{{"interface_mode", to_string(r.interface_mode)},
              {"group_size", r.group_size},
              {"subject", r.subject.str()},
              {"reengagement_time_ms",
               r.reengagement_time_ms ? Json(*r.reengagement_time_ms) : Json(nullptr)},
              {"reengagement_measure", r.reengagement_measure},
              {"gaze_pct_avatars", r.gaze_pct_avatars},
              {"gaze_pct_interface", r.gaze_pct_interface},
              {"interaction_count", r.interaction_count},
              {"missed_utterance_coverage", r.missed_utterance_coverage},
              {"missed_utterances", r.missed_utterances},
              {"speakers_in_window", r.speakers_in_window},
              {"orange_panels", r.orange_panels},
              {"recall", std::move(recall)},
              {"latency", r.latency},
              {"run", r.run}};
}

std::string report_json_text(const RunReport& r) { return to_json(r).dump(2) + "\n"; }

std::string format_report_table(const RunReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& k, const std::string& v) {
    out << "  " << k;
    for (std::size_t i = k.size(); i < 28; ++i) out << ' ';
    out << v << '\n';
  };
  out << "run report: " << to_string(r.interface_mode) << ", subject " << r.subject.str()
      << ", " << r.group_size << " others\n";
  row("reengagement_time_ms",
      r.reengagement_time_ms ? std::to_string(*r.reengagement_time_ms) : std::string("n/a"));
  row("  measured as", r.reengagement_measure);
  row("gaze_pct_avatars", fixed(r.gaze_pct_avatars, 2));
  row("gaze_pct_interface", fixed(r.gaze_pct_interface, 2));
  row("interaction_count", std::to_string(r.interaction_count));
  row("missed_utterances", std::to_string(r.missed_utterances));
  row("speakers_in_window", std::to_string(r.speakers_in_window));
  row("orange_panels", std::to_string(r.orange_panels));
  row("missed_utterance_coverage", fixed(r.missed_utterance_coverage, 3));
  if (!r.recall.empty()) {
    out << "  recall (first window):\n";
    for (const auto& rr : r.recall) {
      out << "    " << rr.speaker.str() << " (" << (rr.role.empty() ? "?" : rr.role) << ") "
          << rr.missed_utterances << " missed, " << (rr.surfaced ? "surfaced" : "not surfaced")
          << (rr.less_talkative ? "  <- less talkative" : "") << '\n';
    }
  }
  if (r.latency.is_object() && !r.latency.empty()) {
    out << "  latency (ms):\n";
    for (const auto& [stage, s] : r.latency.items()) {
      out << "    " << stage << ": n=" << s.value("count", 0);
      if (s.contains("mean") && !s["mean"].is_null()) {
        out << " mean=" << fixed(s["mean"].get<double>(), 1)
            << " sd=" << fixed(s.value("sd", 0.0), 1);
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace catchup
