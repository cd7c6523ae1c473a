#pragma once

#include "catchup/clock.hpp"
#include "catchup/session.hpp"
#include "catchup/wire.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace catchup {

// JSON-lines session log. First line is the header, last line the end
// record; everything between is one of the records below, in the order the
// session saw it.

struct LogHeader {
  int protocol_version = kProtocolVersion;
  SessionConfig session;
  std::string summary_mode = "inline";  // inline | async
  Json run = nullptr;                   // simulation parameters, null for live sessions
};

struct ClockRecord { Timestamp t_ms = 0; };          // Session::advance at t_ms
struct InRecord { std::uint64_t seq = 0; Timestamp t_ms = 0; InboundMessage msg; };
struct OutRecord { WireMessage msg; };
struct SummaryRecord { std::uint64_t job = 0; Timestamp t_ms = 0; Summary summary; };
struct MarkRecord { Timestamp t_ms = 0; std::string event; ParticipantId user; };

using LogRecord = std::variant<ClockRecord, InRecord, OutRecord, SummaryRecord, MarkRecord>;

struct EventLog {
  LogHeader header;
  std::vector<LogRecord> records;
  Timestamp end_ms = 0;

  std::string serialize() const;
};

Json to_json(const LogHeader& h);
Json to_json(const LogRecord& r);

/// Throws ParseError (with the byte offset of the bad line) for malformed or
/// truncated input, VersionError for another protocol version.
EventLog parse_event_log(std::string_view text);
EventLog read_event_log(const std::string& path);
void write_event_log(const EventLog& log, const std::string& path);

/// Wraps a Session and records everything that crosses it. When `stream` is
/// given each record is also written (and flushed) as it happens.
class SessionDriver {
public:
  SessionDriver(LogHeader header, const ClockSource& clock, SummaryDispatcher& dispatcher,
                std::ostream* stream = nullptr);

  std::vector<WireMessage> hello(const Hello& hello, ParticipantId* assigned = nullptr);
  std::vector<WireMessage> ingest(const SessionEvent& event);
  std::vector<WireMessage> metrics(const MetricsRequest& req);
  std::vector<WireMessage> advance();
  std::vector<WireMessage> complete_summary(std::uint64_t job, const Summary& summary);
  void mark(std::string event, const ParticipantId& user);
  /// Writes the end record; repeated calls do nothing. Recording anything
  /// afterwards throws ProtocolError.
  void finish();

  Session& session() noexcept { return session_; }
  const Session& session() const noexcept { return session_; }
  const EventLog& log() const noexcept { return log_; }

private:
  std::vector<WireMessage> record_in(InboundMessage msg, std::vector<WireMessage> out);
  void append(LogRecord r);

  EventLog log_;
  Session session_;
  std::ostream* stream_;
  std::uint64_t in_seq_ = 0;
  bool finished_ = false;
};

struct ReplayResult {
  bool identical = false;
  std::size_t out_records = 0;
  std::optional<std::size_t> first_mismatch;  // index into records
  std::string detail;
  EventLog regenerated;
};

/// Re-drives a fresh session from the inbound, clock and summary records on a
/// virtual clock and compares every produced message with the logged one.
ReplayResult replay(const EventLog& log);

}  // namespace catchup
