#include "catchup/server.hpp"

#include "catchup/error.hpp"
#include "catchup/event_log.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace catchup {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using boost::system::error_code;

namespace {

constexpr std::size_t kMaxLineBytes = 1 << 20;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class Connection : public std::enable_shared_from_this<Connection> {
public:
  // Callbacks run on the I/O thread.
  struct Sink {
    virtual ~Sink() = default;
    virtual void opened(std::shared_ptr<Connection> c) = 0;
    virtual void line(std::uint64_t id, std::string text) = 0;
    virtual void closed(std::uint64_t id) = 0;
  };

  Connection(std::uint64_t id, Sink& sink) : id_(id), sink_(sink) {}
  virtual ~Connection() = default;

  std::uint64_t id() const { return id_; }
  // Both are safe from any thread.
  virtual void send(std::string text) = 0;
  virtual void close() = 0;

protected:
  void deliver_lines(std::string_view chunk) {
    while (!chunk.empty()) {
      auto nl = chunk.find('\n');
      std::string_view line = chunk.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) sink_.line(id_, std::string(line));
      if (nl == std::string_view::npos) break;
      chunk.remove_prefix(nl + 1);
    }
  }
  void report_closed() {
    if (!closed_.exchange(true)) sink_.closed(id_);
  }

  std::uint64_t id_;
  Sink& sink_;
  std::atomic<bool> closed_{false};
};

class TcpConnection final : public Connection {
public:
  TcpConnection(std::uint64_t id, Sink& sink, tcp::socket socket)
      : Connection(id, sink), socket_(std::move(socket)), buf_(kMaxLineBytes) {}

  void start() {
    sink_.opened(shared_from_this());
    read();
  }

  void send(std::string text) override {
    text += '\n';
    asio::post(socket_.get_executor(), [self = self_ptr(), t = std::move(text)]() mutable {
      self->queue_.push_back(std::move(t));
      if (self->queue_.size() == 1) self->write();
    });
  }

  void close() override {
    asio::post(socket_.get_executor(), [self = self_ptr()] { self->shutdown(); });
  }

private:
  std::shared_ptr<TcpConnection> self_ptr() {
    return std::static_pointer_cast<TcpConnection>(shared_from_this());
  }

  void read() {
    asio::async_read_until(socket_, buf_, '\n', [self = self_ptr()](error_code ec, std::size_t n) {
      if (ec) return self->shutdown();
      std::string chunk(asio::buffers_begin(self->buf_.data()),
                        asio::buffers_begin(self->buf_.data()) + static_cast<std::ptrdiff_t>(n));
      self->buf_.consume(n);
      self->deliver_lines(chunk);
      self->read();
    });
  }

  void write() {
    asio::async_write(socket_, asio::buffer(queue_.front()),
                      [self = self_ptr()](error_code ec, std::size_t) {
                        if (ec) return self->shutdown();
                        self->queue_.pop_front();
                        if (!self->queue_.empty()) self->write();
                      });
  }

  void shutdown() {
    error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
    report_closed();
  }

  tcp::socket socket_;
  asio::streambuf buf_;
  std::deque<std::string> queue_;
};

class WsConnection final : public Connection {
public:
  WsConnection(std::uint64_t id, Sink& sink, tcp::socket socket)
      : Connection(id, sink), ws_(std::move(socket)) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kMaxLineBytes);
    ws_.text(true);
    ws_.async_accept(req, [self = self_ptr()](error_code ec) {
      if (ec) return self->report_closed();
      self->sink_.opened(self);
      self->read();
    });
  }

  void send(std::string text) override {
    asio::post(ws_.get_executor(), [self = self_ptr(), t = std::move(text)]() mutable {
      self->queue_.push_back(std::move(t));
      if (self->queue_.size() == 1) self->write();
    });
  }

  void close() override {
    asio::post(ws_.get_executor(), [self = self_ptr()] {
      if (self->closing_) return;
      self->closing_ = true;
      self->ws_.async_close(websocket::close_code::going_away,
                            [self](error_code) { self->report_closed(); });
    });
  }

private:
  std::shared_ptr<WsConnection> self_ptr() {
    return std::static_pointer_cast<WsConnection>(shared_from_this());
  }

  void read() {
    ws_.async_read(buf_, [self = self_ptr()](error_code ec, std::size_t) {
      if (ec) return self->report_closed();
      self->deliver_lines(beast::buffers_to_string(self->buf_.data()));
      self->buf_.consume(self->buf_.size());
      self->read();
    });
  }

  void write() {
    ws_.async_write(asio::buffer(queue_.front()), [self = self_ptr()](error_code ec, std::size_t) {
      if (ec) return self->report_closed();
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buf_;
  std::deque<std::string> queue_;
  bool closing_ = false;
};

std::string_view mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  return "text/plain; charset=utf-8";
}

http::response<http::string_body> static_response(const http::request<http::string_body>& req,
                                                  const std::string& root) {
  auto reply = [&](http::status status, std::string body, std::string_view type) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::server, "catchup");
    res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
    res.keep_alive(req.keep_alive());
    res.body() = req.method() == http::verb::head ? std::string{} : std::move(body);
    res.content_length(res.body().size());
    return res;
  };
  if (req.method() != http::verb::get && req.method() != http::verb::head) {
    return reply(http::status::method_not_allowed, "method not allowed\n", "text/plain");
  }
  std::string target(req.target());
  target = target.substr(0, target.find('?'));
  if (root.empty()) return reply(http::status::not_found, "not found\n", "text/plain");
  if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos) {
    return reply(http::status::bad_request, "bad path\n", "text/plain");
  }
  if (target.back() == '/') target += "index.html";
  const std::filesystem::path path = std::filesystem::path(root) / target.substr(1);
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path)) {
    return reply(http::status::not_found, "not found\n", "text/plain");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  auto res = reply(http::status::ok, ss.str(), mime_type(path));
  if (req.method() == http::verb::head) res.content_length(std::filesystem::file_size(path));
  return res;
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
  HttpSession(tcp::socket socket, std::string root, Connection::Sink& sink,
              std::atomic<std::uint64_t>& next_id)
      : stream_(std::move(socket)), root_(std::move(root)), sink_(sink), next_id_(next_id) {}

  void run() { read(); }

private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buf_, req_, [self = shared_from_this()](error_code ec, std::size_t) {
      if (ec) return self->close();
      self->handle();
    });
  }

  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/ws") {
        return respond(static_response(req_, ""));
      }
      stream_.expires_never();
      auto ws = std::make_shared<WsConnection>(next_id_++, sink_, stream_.release_socket());
      ws->start(std::move(req_));
      return;
    }
    respond(static_response(req_, root_));
  }

  void respond(http::response<http::string_body> res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](error_code ec, std::size_t) {
      if (ec || !sp->keep_alive()) return self->close();
      self->read();
    });
  }

  void close() {
    error_code ignored;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
  std::string root_;
  Connection::Sink& sink_;
  std::atomic<std::uint64_t>& next_id_;
};

std::string log_file_name(const std::string& session_id) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  return "session-" + session_id + "-" + stamp + "-" + std::to_string(::getpid()) + ".jsonl";
}

void bind_acceptor(tcp::acceptor& acc, const std::string& address, std::uint16_t port) {
  error_code ec;
  const tcp::endpoint ep(asio::ip::make_address(address, ec), port);
  if (ec) throw Error(ErrorCode::BadConfig, "bad bind address '" + address + "'");
  acc.open(ep.protocol(), ec);
  if (!ec) acc.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(ep, ec);
  if (ec == asio::error::address_in_use) {
    throw Error(ErrorCode::PortInUse, "port " + std::to_string(port) + " is already in use");
  }
  if (!ec) acc.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot listen on port " + std::to_string(port) + ": " +
                                              ec.message());
}

}  // namespace

class SessionHost::Impl final : public Connection::Sink {
public:
  Impl(ServerOptions options, std::unique_ptr<SummarizerBackend> backend)
      : opt_(std::move(options)), backend_(std::move(backend)), tcp_acc_(io_), web_acc_(io_) {
    opt_.session.validate();
    if (opt_.tick_ms <= 0) throw Error(ErrorCode::BadConfig, "tick_ms must be positive");
    if (!backend_) backend_ = std::make_unique<ExtractiveSummarizer>();
  }

  ~Impl() override { stop(); }

  void start() {
    if (started_) return;
    bind_acceptor(tcp_acc_, opt_.bind_address, opt_.port);
    if (opt_.web_port) bind_acceptor(web_acc_, opt_.bind_address, *opt_.web_port);
    bound_port_ = tcp_acc_.local_endpoint().port();
    if (opt_.web_port) bound_web_port_ = web_acc_.local_endpoint().port();

    std::error_code fs_ec;
    std::filesystem::create_directories(opt_.log_dir, fs_ec);
    log_path_ = (std::filesystem::path(opt_.log_dir) / log_file_name(opt_.session.session_id)).string();
    log_.open(log_path_, std::ios::binary | std::ios::trunc);
    if (!log_) throw Error(ErrorCode::IoError, "cannot write session log " + log_path_);

    LogHeader header;
    header.session = opt_.session;
    header.summary_mode = "async";
    clock_.advance_to(wall_.now());
    driver_ = std::make_unique<SessionDriver>(header, clock_, deferred_, &log_);

    accept_tcp();
    if (opt_.web_port) accept_web();
    started_ = true;
    io_thread_ = std::thread([this] { io_.run(); });
    session_thread_ = std::thread([this] { session_loop(); });
    worker_thread_ = std::thread([this] { worker_loop(); });
  }

  void stop() {
    std::unique_lock guard(stop_mu_);
    if (!started_ || stopped_) return;
    asio::post(io_, [this] {
      error_code ignored;
      tcp_acc_.close(ignored);
      web_acc_.close(ignored);
    });
    {
      std::lock_guard lk(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    session_thread_.join();
    {
      std::lock_guard lk(worker_mu_);
      worker_stop_ = true;
    }
    worker_cv_.notify_all();
    worker_thread_.join();
    // Let queued writes and closes run before tearing the loop down.
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    io_.stop();
    io_thread_.join();
    stopped_ = true;
    stopped_cv_.notify_all();
  }

  void wait() {
    std::unique_lock guard(stop_mu_);
    stopped_cv_.wait(guard, [this] { return stopped_ || !started_; });
  }

  std::uint16_t port() const { return bound_port_; }
  std::optional<std::uint16_t> web_port() const {
    if (!opt_.web_port) return std::nullopt;
    return bound_web_port_;
  }
  const std::string& log_path() const { return log_path_; }

  // ---- Sink (I/O thread) ----
  void opened(std::shared_ptr<Connection> c) override {
    post([this, c] { conns_[c->id()] = ConnState{c, std::nullopt, 0}; });
  }
  void line(std::uint64_t id, std::string text) override {
    post([this, id, t = std::move(text)] { handle_line(id, t); });
  }
  void closed(std::uint64_t id) override {
    post([this, id] { handle_closed(id); });
  }

private:
  struct ConnState {
    std::shared_ptr<Connection> conn;
    std::optional<ParticipantId> user;
    std::uint64_t deliver_seq = 0;
  };

  void post(std::function<void()> task) {
    {
      std::lock_guard lk(mu_);
      if (stopping_) return;
      tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

  void accept_tcp() {
    tcp_acc_.async_accept([this](error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<TcpConnection>(next_id_++, *this, std::move(socket))->start();
      if (tcp_acc_.is_open()) accept_tcp();
    });
  }

  void accept_web() {
    web_acc_.async_accept([this](error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpSession>(std::move(socket), opt_.web_root, *this, next_id_)->run();
      if (web_acc_.is_open()) accept_web();
    });
  }

  // ---- session thread ----
  void sync_clock() {
    const Timestamp t = wall_.now();
    if (t > clock_.now()) clock_.advance_to(t);
  }

  void session_loop() {
    Timestamp next_tick = clock_.now() + opt_.tick_ms;
    for (;;) {
      std::deque<std::function<void()>> batch;
      bool stop = false;
      {
        std::unique_lock lk(mu_);
        const auto wait = std::chrono::milliseconds(std::max<Timestamp>(0, next_tick - wall_.now()));
        cv_.wait_for(lk, wait, [this] { return !tasks_.empty() || stopping_; });
        batch.swap(tasks_);
        stop = stopping_;
      }
      for (auto& task : batch) {
        sync_clock();
        guarded(task);
      }
      sync_clock();
      if (clock_.now() >= next_tick) {
        guarded([this] { route(driver_->advance(), std::nullopt); });
        while (next_tick <= clock_.now()) next_tick += opt_.tick_ms;
      }
      hand_off_jobs();
      if (stop) break;
    }
    for (auto& [id, c] : conns_) c.conn->close();
    conns_.clear();
    conn_of_.clear();
    sync_clock();
    driver_->finish();
    log_.flush();
  }

  template <class F>
  void guarded(F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      std::cerr << "catchup: session task failed: " << e.what() << '\n';
    }
  }

  void hand_off_jobs() {
    if (deferred_.pending.empty()) return;
    {
      std::lock_guard lk(worker_mu_);
      for (auto& j : deferred_.pending) worker_jobs_.push_back(std::move(j));
    }
    deferred_.pending.clear();
    worker_cv_.notify_one();
  }

  void deliver(std::uint64_t cid, const WireMessage& m) {
    auto it = conns_.find(cid);
    if (it == conns_.end()) return;
    Json j = to_json(m);
    j["deliver_seq"] = ++it->second.deliver_seq;
    it->second.conn->send(j.dump());
  }

  void route(const std::vector<WireMessage>& msgs, std::optional<std::uint64_t> origin) {
    for (const auto& m : msgs) {
      if (m.type == MessageType::Error && origin) {
        deliver(*origin, m);
      } else if (m.to) {
        if (auto it = conn_of_.find(*m.to); it != conn_of_.end()) deliver(it->second, m);
      } else {
        for (const auto& [cid, c] : conns_) {
          if (c.user) deliver(cid, m);
        }
      }
    }
  }

  // Rejections that never reach the session carry seq 0.
  void reject(std::uint64_t cid, const Error& e) {
    WireMessage m;
    m.type = MessageType::Error;
    m.t_ms = clock_.now();
    m.payload = Json{{"code", to_string(e.code())}, {"message", e.what()}};
    deliver(cid, m);
  }

  void handle_line(std::uint64_t cid, const std::string& text) {
    auto it = conns_.find(cid);
    if (it == conns_.end()) return;
    ConnState& c = it->second;
    InboundMessage msg;
    try {
      msg = decode_inbound_line(text);
    } catch (const Error& e) {
      return reject(cid, e);
    }
    std::visit(
        overloaded{
            [&](Hello& h) {
              if (c.user) return reject(cid, Error(ErrorCode::ProtocolError, "Hello already received"));
              ParticipantId assigned;
              auto out = driver_->hello(h, &assigned);
              if (!assigned.empty()) {
                c.user = assigned;
                conn_of_[assigned] = cid;
              }
              route(out, cid);
            },
            [&](SessionEvent& ev) {
              if (!c.user) return reject(cid, Error(ErrorCode::ProtocolError, "send Hello first"));
              if (event_sender(ev) != *c.user) {
                return reject(cid, Error(ErrorCode::ProtocolError,
                                         "events must be sent by their own participant"));
              }
              if (auto* p = std::get_if<PresenceEvent>(&ev); p && p->kind == PresenceKind::Join) {
                return reject(cid, Error(ErrorCode::ProtocolError, "joining happens through Hello"));
              }
              route(driver_->ingest(ev), cid);
            },
            [&](MetricsRequest& r) {
              if (!c.user) return reject(cid, Error(ErrorCode::ProtocolError, "send Hello first"));
              r.user = *c.user;
              route(driver_->metrics(r), cid);
            },
        },
        msg);
  }

  void handle_closed(std::uint64_t cid) {
    auto it = conns_.find(cid);
    if (it == conns_.end()) return;
    const auto user = it->second.user;
    conns_.erase(it);
    if (!user) return;
    if (auto m = conn_of_.find(*user); m != conn_of_.end() && m->second == cid) conn_of_.erase(m);
    if (driver_->session().is_present(*user)) {
      route(driver_->ingest(PresenceEvent{*user, PresenceKind::Dropout, 0, {}, {}, false}),
            std::nullopt);
    }
  }

  // ---- summary worker ----
  void worker_loop() {
    for (;;) {
      DeferredDispatcher::Job job;
      {
        std::unique_lock lk(worker_mu_);
        worker_cv_.wait(lk, [this] { return !worker_jobs_.empty() || worker_stop_; });
        if (worker_stop_) return;
        job = std::move(worker_jobs_.front());
        worker_jobs_.pop_front();
      }
      Summary s = summarize_with_fallback(job.request, *backend_, wall_);
      post([this, id = job.id, s = std::move(s)] { route(driver_->complete_summary(id, s), std::nullopt); });
    }
  }

  ServerOptions opt_;
  std::unique_ptr<SummarizerBackend> backend_;

  asio::io_context io_;
  tcp::acceptor tcp_acc_;
  tcp::acceptor web_acc_;
  std::atomic<std::uint64_t> next_id_{1};
  std::uint16_t bound_port_ = 0;
  std::uint16_t bound_web_port_ = 0;

  WallClock wall_;
  VirtualClock clock_;
  DeferredDispatcher deferred_;
  std::ofstream log_;
  std::string log_path_;
  std::unique_ptr<SessionDriver> driver_;
  std::map<std::uint64_t, ConnState> conns_;
  std::map<ParticipantId, std::uint64_t> conn_of_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stopping_ = false;

  std::mutex worker_mu_;
  std::condition_variable worker_cv_;
  std::deque<DeferredDispatcher::Job> worker_jobs_;
  bool worker_stop_ = false;

  std::mutex stop_mu_;
  std::condition_variable stopped_cv_;
  bool started_ = false;
  bool stopped_ = false;

  std::thread io_thread_;
  std::thread session_thread_;
  std::thread worker_thread_;
};

SessionHost::SessionHost(ServerOptions options, std::unique_ptr<SummarizerBackend> backend)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(backend))) {}

SessionHost::~SessionHost() = default;

void SessionHost::start() { impl_->start(); }
void SessionHost::stop() { impl_->stop(); }
void SessionHost::wait() { impl_->wait(); }
std::uint16_t SessionHost::port() const { return impl_->port(); }
std::optional<std::uint16_t> SessionHost::web_port() const { return impl_->web_port(); }
const std::string& SessionHost::log_path() const { return impl_->log_path(); }

}  // namespace catchup
