#include "catchup/event_log.hpp"

#include "catchup/error.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace catchup {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void parse_error(std::size_t offset, const std::string& what) {
  throw Error(ErrorCode::ParseError, "byte " + std::to_string(offset) + ": " + what);
}

LogHeader header_from_json(const Json& j) {
  LogHeader h;
  h.protocol_version = j.at("protocol_version").get<int>();
  if (h.protocol_version != kProtocolVersion) {
    throw Error(ErrorCode::VersionError, "log protocol_version " +
                                             std::to_string(h.protocol_version) +
                                             " is not supported (expected " +
                                             std::to_string(kProtocolVersion) + ")");
  }
  h.session = session_config_from_json(j.at("session"));
  h.summary_mode = j.at("summary_mode").get<std::string>();
  if (h.summary_mode != "inline" && h.summary_mode != "async") {
    throw Error(ErrorCode::ParseError, "unknown summary_mode '" + h.summary_mode + "'");
  }
  h.run = j.value("run", Json(nullptr));
  return h;
}

LogRecord record_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "clock") return ClockRecord{j.at("t_ms").get<Timestamp>()};
  if (kind == "in") {
    return InRecord{j.at("seq").get<std::uint64_t>(), j.at("t_ms").get<Timestamp>(),
                    inbound_from_json(j.at("msg"))};
  }
  if (kind == "out") return OutRecord{wire_message_from_json(j.at("msg"))};
  if (kind == "summary") {
    return SummaryRecord{j.at("job").get<std::uint64_t>(), j.at("t_ms").get<Timestamp>(),
                         summary_from_json(j.at("summary"))};
  }
  if (kind == "mark") {
    return MarkRecord{j.at("t_ms").get<Timestamp>(), j.at("event").get<std::string>(),
                      ParticipantId(j.at("user").get<std::string>())};
  }
  throw Error(ErrorCode::ParseError, "unknown record kind '" + kind + "'");
}

}  // namespace

Json to_json(const LogHeader& h) {
  return Json{{"kind", "header"},
              {"protocol_version", h.protocol_version},
              {"session", to_json(h.session)},
              {"summary_mode", h.summary_mode},
              {"run", h.run}};
}

Json to_json(const LogRecord& r) {
  return std::visit(
      overloaded{
          [](const ClockRecord& c) { return Json{{"kind", "clock"}, {"t_ms", c.t_ms}}; },
          [](const InRecord& in) {
            return Json{{"kind", "in"}, {"seq", in.seq}, {"t_ms", in.t_ms}, {"msg", to_json(in.msg)}};
          },
          [](const OutRecord& o) { return Json{{"kind", "out"}, {"msg", to_json(o.msg)}}; },
          [](const SummaryRecord& s) {
            return Json{{"kind", "summary"},
                        {"job", s.job},
                        {"t_ms", s.t_ms},
                        {"summary", to_json(s.summary)}};
          },
          [](const MarkRecord& m) {
            return Json{{"kind", "mark"}, {"t_ms", m.t_ms}, {"event", m.event}, {"user", m.user.str()}};
          },
      },
      r);
}

namespace {
Json end_record(const EventLog& log) {
  return Json{{"kind", "end"}, {"t_ms", log.end_ms}, {"records", log.records.size()}};
}
}  // namespace

std::string EventLog::serialize() const {
  std::string out = to_json(header).dump();
  out += '\n';
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  out += end_record(*this).dump();
  out += '\n';
  return out;
}

EventLog parse_event_log(std::string_view text) {
  EventLog log;
  bool have_header = false;
  bool ended = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) parse_error(pos, "truncated line (no trailing newline)");
    const std::string_view line = text.substr(pos, nl - pos);
    const std::size_t offset = pos;
    pos = nl + 1;
    if (line.empty()) continue;
    if (ended) parse_error(offset, "content after the end record");

    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) parse_error(offset, "not a JSON object");
    try {
      const std::string kind = j.at("kind").get<std::string>();
      if (!have_header) {
        if (kind != "header") parse_error(offset, "first record must be the header");
        log.header = header_from_json(j);
        have_header = true;
      } else if (kind == "end") {
        log.end_ms = j.at("t_ms").get<Timestamp>();
        if (j.at("records").get<std::size_t>() != log.records.size()) {
          parse_error(offset, "end record count does not match");
        }
        ended = true;
      } else {
        log.records.push_back(record_from_json(j));
      }
    } catch (const Json::exception& e) {
      parse_error(offset, e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::VersionError) throw;
      if (e.code() == ErrorCode::ParseError && std::string_view(e.what()).starts_with("byte ")) {
        throw;
      }
      parse_error(offset, e.what());
    }
  }
  if (!have_header) parse_error(0, "empty log");
  if (!ended) parse_error(text.size(), "log ends without an end record");
  return log;
}

EventLog read_event_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_event_log(ss.str());
}

void write_event_log(const EventLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << log.serialize();
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed: " + path);
}

// ---- SessionDriver ---------------------------------------------------------

SessionDriver::SessionDriver(LogHeader header, const ClockSource& clock,
                             SummaryDispatcher& dispatcher, std::ostream* stream)
    : session_(header.session, clock, dispatcher), stream_(stream) {
  log_.header = std::move(header);
  if (stream_) {
    *stream_ << to_json(log_.header).dump() << '\n';
    stream_->flush();
  }
}

void SessionDriver::append(LogRecord r) {
  if (finished_) throw Error(ErrorCode::ProtocolError, "log already finished");
  if (stream_) {
    *stream_ << to_json(r).dump() << '\n';
    stream_->flush();
  }
  log_.records.push_back(std::move(r));
}

std::vector<WireMessage> SessionDriver::record_in(InboundMessage msg,
                                                  std::vector<WireMessage> out) {
  append(InRecord{++in_seq_, session_.now(), std::move(msg)});
  for (const auto& m : out) append(OutRecord{m});
  return out;
}

std::vector<WireMessage> SessionDriver::hello(const Hello& hello, ParticipantId* assigned) {
  auto out = session_.hello(hello, assigned);
  return record_in(hello, std::move(out));
}

std::vector<WireMessage> SessionDriver::ingest(const SessionEvent& event) {
  SessionEvent stamped = event;
  const Timestamp now = session_.now();
  std::visit([now](auto& ev) { ev.t_ms = now; }, stamped);
  auto out = session_.ingest(stamped);
  return record_in(SessionEvent(stamped), std::move(out));
}

std::vector<WireMessage> SessionDriver::metrics(const MetricsRequest& req) {
  std::optional<ParticipantId> to;
  if (!req.user.empty()) to = req.user;
  auto out = session_.metrics_message(to);
  return record_in(req, std::move(out));
}

std::vector<WireMessage> SessionDriver::advance() {
  const Timestamp now = session_.now();
  auto out = session_.advance();
  append(ClockRecord{now});
  for (const auto& m : out) append(OutRecord{m});
  return out;
}

std::vector<WireMessage> SessionDriver::complete_summary(std::uint64_t job,
                                                         const Summary& summary) {
  const Timestamp now = session_.now();
  auto out = session_.complete_summary(job, summary);
  append(SummaryRecord{job, now, summary});
  for (const auto& m : out) append(OutRecord{m});
  return out;
}

void SessionDriver::mark(std::string event, const ParticipantId& user) {
  append(MarkRecord{session_.now(), std::move(event), user});
}

void SessionDriver::finish() {
  if (finished_) return;
  log_.end_ms = session_.now();
  if (stream_) {
    *stream_ << end_record(log_).dump() << '\n';
    stream_->flush();
  }
  finished_ = true;
}

// ---- replay ------------------------------------------------------------------

ReplayResult replay(const EventLog& log) {
  ReplayResult result;
  VirtualClock clock;
  ExtractiveSummarizer extractive;
  InlineDispatcher inline_dispatch(extractive, clock);
  DeferredDispatcher deferred;
  SummaryDispatcher& dispatcher =
      log.header.summary_mode == "inline" ? static_cast<SummaryDispatcher&>(inline_dispatch)
                                          : static_cast<SummaryDispatcher&>(deferred);

  SessionDriver driver(log.header, clock, dispatcher);
  std::vector<WireMessage> produced;
  auto move_to = [&](Timestamp t) {
    if (t > clock.now()) clock.advance_to(t);
  };

  for (const auto& rec : log.records) {
    std::vector<WireMessage> out;
    if (const auto* c = std::get_if<ClockRecord>(&rec)) {
      move_to(c->t_ms);
      out = driver.advance();
    } else if (const auto* in = std::get_if<InRecord>(&rec)) {
      move_to(in->t_ms);
      out = std::visit(overloaded{
                           [&](const Hello& h) { return driver.hello(h); },
                           [&](const SessionEvent& e) { return driver.ingest(e); },
                           [&](const MetricsRequest& r) { return driver.metrics(r); },
                       },
                       in->msg);
    } else if (const auto* s = std::get_if<SummaryRecord>(&rec)) {
      move_to(s->t_ms);
      out = driver.complete_summary(s->job, s->summary);
    } else if (const auto* m = std::get_if<MarkRecord>(&rec)) {
      move_to(m->t_ms);
      driver.mark(m->event, m->user);
    }
    produced.insert(produced.end(), out.begin(), out.end());
  }
  move_to(log.end_ms);
  driver.finish();

  std::size_t k = 0;
  result.identical = true;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto* o = std::get_if<OutRecord>(&log.records[i]);
    if (!o) continue;
    ++result.out_records;
    if (k >= produced.size() || !(produced[k] == o->msg)) {
      if (result.identical) {
        result.identical = false;
        result.first_mismatch = i;
        result.detail = "record " + std::to_string(i + 1) + ": logged " + to_json(o->msg).dump() +
                        (k < produced.size() ? ", replayed " + to_json(produced[k]).dump()
                                             : ", replay produced nothing");
      }
    }
    ++k;
  }
  if (result.identical && k != produced.size()) {
    result.identical = false;
    result.detail = "replay produced " + std::to_string(produced.size() - k) + " extra messages";
  }
  result.regenerated = driver.log();
  return result;
}

}  // namespace catchup
