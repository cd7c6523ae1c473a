// catchup: serve a live session, run scripted simulations, replay and report
// on session logs.

#include "catchup/error.hpp"
#include "catchup/event_log.hpp"
#include "catchup/llm_backend.hpp"
#include "catchup/metrics.hpp"
#include "catchup/report.hpp"
#include "catchup/server.hpp"
#include "catchup/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <pthread.h>
#include <sstream>

using namespace catchup;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvariant = 2, kIo = 3 };

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadConfig:
    case ErrorCode::SchemaError:
    case ErrorCode::ScheduleOutOfRange:
    case ErrorCode::InvalidRequest:
    case ErrorCode::NoRejoinFound: return kUsage;
    case ErrorCode::IoError:
    case ErrorCode::PortInUse:
    case ErrorCode::ParseError:
    case ErrorCode::VersionError: return kIo;
    default: return kInvariant;
  }
}

// Settings shared by the subcommands. Every flag has a config-file key: the
// long flag name with dashes turned into underscores.
struct Settings {
  std::string config_path;
  std::string session_id = "session";
  std::string mode = "engagesync";
  std::string bind = "127.0.0.1";
  int port = 7450;
  int web_port = 0;  // 0 = port + 1
  std::string web;
  std::string log_dir = "logs";
  std::string script;
  Timestamp dropout_at = 180000;
  Timestamp rejoin_at = 420000;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool matrix = false;
  std::string policy = "follow_speaker";
  Timestamp sample_period_ms = 100;
  int reading_wpm = kDefaultReadingWpm;
  Timestamp pause_threshold_ms = kDefaultPauseThresholdMs;
  FsmConfig fsm;
};

using Json = nlohmann::json;

struct Binding {
  CLI::Option* option = nullptr;
  std::function<void(const Json&)> assign;
};

class Flags {
public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <class T>
  void add(const std::string& flag, T& target, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + flag, target, help)->capture_default_str();
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    bindings_[key] = {opt, [&target, key](const Json& v) {
                        try {
                          target = v.get<T>();
                        } catch (const Json::exception&) {
                          throw Error(ErrorCode::BadConfig, "config key " + key + ": wrong type");
                        }
                      }};
  }
  void add_flag(const std::string& flag, bool& target, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + flag, target, help);
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    bindings_[key] = {opt, [&target, key](const Json& v) {
                        if (!v.is_boolean()) {
                          throw Error(ErrorCode::BadConfig, "config key " + key + ": expected a boolean");
                        }
                        target = v.get<bool>();
                      }};
  }

  /// Config values fill in whatever the command line left unset.
  void apply_config(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::BadConfig, path + ": config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
      auto it = bindings_.find(key);
      if (it == bindings_.end()) throw Error(ErrorCode::BadConfig, path + ": unknown key " + key);
      if (it->second.option->count() == 0) it->second.assign(value);
    }
  }

private:
  CLI::App* app_;
  std::map<std::string, Binding> bindings_;
};

void add_fsm_flags(Flags& f, Settings& s) {
  f.add("fade-after-ms", s.fsm.fade_after_ms, "hide unread panels after this long without gaze");
  f.add("read-after-gaze-ms", s.fsm.read_after_gaze_ms, "dwell that marks a panel read");
  f.add("lookback-grace-ms", s.fsm.lookback_grace_ms, "look-back grace for read panels");
  f.add("disengage-after-ms", s.fsm.disengage_after_ms, "gaze absence that counts as disengaged");
  f.add("engagement-summary-words", s.fsm.engagement_summary_words, "green panel word limit");
  f.add("reengagement-summary-words", s.fsm.reengagement_summary_words, "orange panel word limit");
  f.add("pause-threshold-ms", s.pause_threshold_ms, "silence that ends an utterance");
}

Json effective(const Settings& s, const std::string& command) {
  Json j{{"command", command},
         {"mode", s.mode},
         {"pause_threshold_ms", s.pause_threshold_ms},
         {"fsm", Json{{"fade_after_ms", s.fsm.fade_after_ms},
                      {"read_after_gaze_ms", s.fsm.read_after_gaze_ms},
                      {"lookback_grace_ms", s.fsm.lookback_grace_ms},
                      {"disengage_after_ms", s.fsm.disengage_after_ms},
                      {"engagement_summary_words", s.fsm.engagement_summary_words},
                      {"reengagement_summary_words", s.fsm.reengagement_summary_words}}}};
  if (command == "serve") {
    j["bind"] = s.bind;
    j["port"] = s.port;
    j["web_port"] = s.web_port;
    j["web"] = s.web;
    j["log_dir"] = s.log_dir;
    j["session_id"] = s.session_id;
  } else {
    j["script"] = s.script;
    j["dropout_at"] = s.dropout_at;
    j["rejoin_at"] = s.rejoin_at;
    j["seed"] = s.seed;
    j["out_dir"] = s.out_dir;
    j["matrix"] = s.matrix;
    j["policy"] = s.policy;
    j["sample_period_ms"] = s.sample_period_ms;
    j["reading_wpm"] = s.reading_wpm;
  }
  return j;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out || !(out << content) || !out.flush()) {
    throw Error(ErrorCode::IoError, "cannot write " + p.string());
  }
}

std::string mode_slug(InterfaceMode m) {
  switch (m) {
    case InterfaceMode::TableTI: return "table";
    case InterfaceMode::AvatarTI: return "avatar";
    case InterfaceMode::EngageSync: return "engagesync";
  }
  return "?";
}

std::vector<std::string> invariant_violations(const SimulationResult& r,
                                              const SimulationOptions& opt) {
  std::vector<std::string> bad;
  const RunReport& rep = r.report;
  if (rep.missed_utterance_coverage < 0.0 || rep.missed_utterance_coverage > 1.0) {
    bad.push_back("coverage outside [0, 1]");
  }
  if (opt.mode == InterfaceMode::EngageSync && rep.missed_utterance_coverage != 1.0) {
    bad.push_back("EngageSync coverage is not 1.0");
  }
  if (opt.mode == InterfaceMode::AvatarTI && rep.missed_utterance_coverage != 0.0) {
    bad.push_back("AvatarTI coverage is not 0.0");
  }
  if (rep.gaze_pct_avatars + rep.gaze_pct_interface > 100.0 + 1e-9) {
    bad.push_back("gaze percentages exceed 100");
  }
  for (const auto& rec : r.log.records) {
    const auto* in = std::get_if<InRecord>(&rec);
    if (!in || in->t_ms <= opt.schedule.dropout_at_ms || in->t_ms >= opt.schedule.rejoin_at_ms) {
      continue;
    }
    const auto* ev = std::get_if<SessionEvent>(&in->msg);
    if (!ev || event_sender(*ev) != opt.schedule.user) continue;
    if (std::holds_alternative<GazeSample>(*ev) || std::holds_alternative<PinchEvent>(*ev)) {
      bad.push_back("subject gaze or pinch during the dropout");
      break;
    }
  }
  const ReplayResult rp = replay(r.log);
  if (!rp.identical) bad.push_back("replay diverges: " + rp.detail);
  return bad;
}

int run_simulate(const Settings& s) {
  const MeetingScript script = load_script(s.script);
  std::vector<InterfaceMode> modes;
  if (s.matrix) {
    modes = {InterfaceMode::TableTI, InterfaceMode::AvatarTI, InterfaceMode::EngageSync};
  } else {
    modes = {parse_interface_mode(s.mode)};
  }
  s.fsm.validate();
  std::error_code ec;
  fs::create_directories(s.out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + s.out_dir + ": " + ec.message());

  const std::string stem = fs::path(s.script).stem().string();
  int status = kOk;
  for (InterfaceMode mode : modes) {
    SimulationOptions opt;
    opt.mode = mode;
    opt.schedule.dropout_at_ms = s.dropout_at;
    opt.schedule.rejoin_at_ms = s.rejoin_at;
    opt.policy.kind = parse_gaze_policy(s.policy);
    opt.policy.sample_period_ms = s.sample_period_ms;
    opt.fsm = s.fsm;
    opt.pause_threshold_ms = s.pause_threshold_ms;
    opt.seed = s.seed;
    opt.reading_wpm = s.reading_wpm;
    opt.script_name = fs::path(s.script).filename().string();

    const SimulationResult r = run_simulation(script, opt);
    const fs::path base = fs::path(s.out_dir) / (stem + "-" + mode_slug(mode));
    write_file(base.string() + ".log.jsonl", r.log.serialize());
    write_file(base.string() + ".report.json", report_json_text(r.report));
    const std::string table = format_report_table(r.report);
    write_file(base.string() + ".report.txt", table);
    write_file(base.string() + ".plot.tsv", plot_data_tsv(r.log, opt.schedule.user));
    std::cout << table << "  written to " << base.string() << ".*\n\n";

    for (const auto& v : invariant_violations(r, opt)) {
      std::cerr << "invariant violated (" << to_string(mode) << "): " << v << '\n';
      status = kInvariant;
    }
  }
  return status;
}

int run_replay(const std::string& path, const std::string& out, const std::string& format) {
  const EventLog log = read_event_log(path);
  const ReplayResult r = replay(log);
  if (!r.identical) {
    std::cerr << "replay diverges from the log: " << r.detail << '\n';
    return kInvariant;
  }
  const RunReport rep = compute_report(r.regenerated);
  const std::string text = format == "table" ? format_report_table(rep) : report_json_text(rep);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  std::cerr << "replayed " << log.records.size() << " records, " << r.out_records
            << " outbound messages identical\n";
  return kOk;
}

int run_report(const std::string& path, const std::string& user, const std::string& out,
               const std::string& format, const std::string& plot) {
  const EventLog log = read_event_log(path);
  std::optional<ParticipantId> subject;
  if (!user.empty()) subject = ParticipantId(user);
  const RunReport rep = compute_report(log, subject);
  const std::string text = format == "table" ? format_report_table(rep) : report_json_text(rep);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  if (!plot.empty()) write_file(plot, plot_data_tsv(log, rep.subject));
  return kOk;
}

int run_serve(const Settings& s) {
  ServerOptions opt;
  opt.bind_address = s.bind;
  if (s.port < 0 || s.port > 65535) throw Error(ErrorCode::BadConfig, "port out of range");
  opt.port = static_cast<std::uint16_t>(s.port);
  const int web_port = s.web_port != 0 ? s.web_port : (s.port == 0 ? 0 : s.port + 1);
  if (web_port < 0 || web_port > 65535) throw Error(ErrorCode::BadConfig, "web_port out of range");
  opt.web_port = static_cast<std::uint16_t>(web_port);
  opt.web_root = s.web;
  opt.log_dir = s.log_dir;
  opt.session.session_id = s.session_id;
  opt.session.interface_mode = parse_interface_mode(s.mode);
  opt.session.fsm = s.fsm;
  opt.session.pause_threshold_ms = s.pause_threshold_ms;
  opt.session.validate();

  std::unique_ptr<SummarizerBackend> backend;
  if (auto llm = LlmConfig::from_env()) {
    backend = std::make_unique<LlmSummarizer>(*llm);
  } else {
    backend = std::make_unique<ExtractiveSummarizer>();
  }
  const std::string backend_name(backend->name());

  // Signals are taken synchronously below, so block them before any thread
  // starts and inherits the mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  SessionHost host(opt, std::move(backend));
  host.start();
  std::cout << "catchup serving session '" << s.session_id << "' ("
            << to_string(opt.session.interface_mode) << ", summaries: " << backend_name << ")\n"
            << "  tcp  " << s.bind << ":" << host.port() << "\n"
            << "  web  http://" << s.bind << ":" << *host.web_port() << "/  (websocket /ws)\n"
            << "  log  " << host.log_path() << "\n"
            << "  fsm  " << to_json(opt.session.fsm).dump() << std::endl;

  int sig = 0;
  sigwait(&set, &sig);
  std::cout << "shutting down (signal " << sig << ")" << std::endl;
  host.stop();
  std::cout << "log flushed: " << host.log_path() << std::endl;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catchup: context-aware meeting transcription server and simulator"};
  app.require_subcommand(1);
  Settings s;

  auto* serve = app.add_subcommand("serve", "host a live session");
  Flags serve_flags(serve);
  serve->add_option("--config", s.config_path, "JSON config file; flags win over it");
  serve_flags.add("mode", s.mode, "table | avatar | engagesync");
  serve_flags.add("bind", s.bind, "listen address");
  serve_flags.add("port", s.port, "TCP port for newline-delimited JSON clients");
  serve_flags.add("web-port", s.web_port, "HTTP/WebSocket port (default port+1)");
  serve_flags.add("web", s.web, "directory of static web client files");
  serve_flags.add("log-dir", s.log_dir, "where session logs are written");
  serve_flags.add("session-id", s.session_id, "session name");
  add_fsm_flags(serve_flags, s);

  auto* simulate = app.add_subcommand("simulate", "run a scripted meeting on a virtual clock");
  Flags sim_flags(simulate);
  simulate->add_option("--config", s.config_path, "JSON config file; flags win over it");
  sim_flags.add("script", s.script, "meeting script (JSON)");
  sim_flags.add("mode", s.mode, "table | avatar | engagesync");
  sim_flags.add_flag("matrix", s.matrix, "run all three modes");
  sim_flags.add("dropout-at", s.dropout_at, "subject drops out at (ms)");
  sim_flags.add("rejoin-at", s.rejoin_at, "subject rejoins at (ms)");
  sim_flags.add("seed", s.seed, "seed for randomized gaze policies");
  sim_flags.add("out-dir", s.out_dir, "directory for logs and reports");
  sim_flags.add("policy", s.policy, "follow_speaker | round_robin");
  sim_flags.add("sample-period-ms", s.sample_period_ms, "gaze sample period");
  sim_flags.add("reading-wpm", s.reading_wpm, "reading rate for the baseline catch-up proxy");
  add_fsm_flags(sim_flags, s);

  std::string log_path, out, format = "json", user, plot;
  auto* replay_cmd = app.add_subcommand("replay", "re-drive a log and print its report");
  replay_cmd->add_option("log", log_path, "session log (JSONL)")->required();
  replay_cmd->add_option("--out", out, "write the report here instead of stdout");
  replay_cmd->add_option("--format", format, "json | table")
      ->check(CLI::IsMember({"json", "table"}));

  auto* report_cmd = app.add_subcommand("report", "compute a report from a log");
  report_cmd->add_option("log", log_path, "session log (JSONL)")->required();
  report_cmd->add_option("--user", user, "subject (defaults to the run's subject)");
  report_cmd->add_option("--out", out, "write the report here instead of stdout");
  report_cmd->add_option("--format", format, "json | table")
      ->check(CLI::IsMember({"json", "table"}));
  report_cmd->add_option("--plot", plot, "also write plot data (TSV) here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (serve->parsed()) {
      serve_flags.apply_config(s.config_path);
      std::cerr << "effective config: " << effective(s, "serve").dump() << '\n';
      return run_serve(s);
    }
    if (simulate->parsed()) {
      sim_flags.apply_config(s.config_path);
      if (s.script.empty()) throw Error(ErrorCode::BadConfig, "--script is required");
      std::cerr << "effective config: " << effective(s, "simulate").dump() << '\n';
      return run_simulate(s);
    }
    if (replay_cmd->parsed()) return run_replay(log_path, out, format);
    if (report_cmd->parsed()) return run_report(log_path, user, out, format, plot);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  }
  return kUsage;
}
