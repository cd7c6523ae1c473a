#pragma once

#include "catchup/session.hpp"
#include "catchup/summarizer.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace catchup {

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 7450;              // newline-delimited JSON over TCP; 0 picks a free port
  std::optional<std::uint16_t> web_port;  // HTTP static files + WebSocket at /ws
  std::string web_root;                   // empty: only /ws is served
  std::string log_dir = "logs";
  Timestamp tick_ms = 100;
  SessionConfig session;
};

/// Live host for one session.
///
/// Threads: one Asio I/O thread for every socket, one session thread that
/// owns the Session and applies inbound messages, timer ticks and summary
/// completions in arrival order, and one summary worker. Every message the
/// session sees or produces is appended to a JSONL log in `log_dir`.
class SessionHost {
public:
  SessionHost(ServerOptions options, std::unique_ptr<SummarizerBackend> backend);
  ~SessionHost();

  SessionHost(const SessionHost&) = delete;
  SessionHost& operator=(const SessionHost&) = delete;

  /// Binds the listeners and starts the threads. Throws PortInUse or IoError.
  void start();
  /// Stops accepting, closes clients, writes the end record. Idempotent.
  void stop();
  /// Blocks until stop() has completed (from any thread, or a signal).
  void wait();

  std::uint16_t port() const;
  std::optional<std::uint16_t> web_port() const;
  const std::string& log_path() const;

private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace catchup
