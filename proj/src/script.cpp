#include "catchup/script.hpp"

#include "catchup/error.hpp"
#include "catchup/summarizer.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace catchup {

using Json = nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::SchemaError, where + ": " + what);
}

void reject_unknown(const Json& obj, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      schema(where + "." + key, "unknown field");
    }
  }
}

const Json* opt(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string req_string(const Json& obj, const char* key, const std::string& where) {
  const Json* v = opt(obj, key);
  if (!v) schema(where + "." + key, "missing");
  if (!v->is_string()) schema(where + "." + key, "expected a string");
  return v->get<std::string>();
}

std::int64_t req_int(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) schema(where, "expected an integer");
  return v.get<std::int64_t>();
}

AgentRole parse_role(const std::string& s, const std::string& where) {
  if (s == "pro" || s == "Pro") return AgentRole::Pro;
  if (s == "against" || s == "Against") return AgentRole::Against;
  if (s == "less_talkative" || s == "LessTalkative") return AgentRole::LessTalkative;
  schema(where, "role must be pro, against or less_talkative, got '" + s + "'");
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

constexpr std::array<std::string_view, 7> kSevenColors = {
    "#e6194b", "#4363d8", "#3cb44b", "#f58231", "#911eb4", "#42d4f4", "#f032e6"};

}  // namespace

std::string_view to_string(AgentRole r) {
  switch (r) {
    case AgentRole::Pro: return "pro";
    case AgentRole::Against: return "against";
    case AgentRole::LessTalkative: return "less_talkative";
  }
  return "?";
}

Timestamp MeetingScript::duration_ms() const {
  Timestamp end = 0;
  for (const auto& l : lines) end = std::max(end, l.end_ms());
  return end;
}

const ScriptAgent* MeetingScript::agent(const ParticipantId& id) const {
  for (const auto& a : agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const ScriptAgent& MeetingScript::less_talkative() const {
  for (const auto& a : agents) {
    if (a.role == AgentRole::LessTalkative) return a;
  }
  throw Error(ErrorCode::SchemaError, "script has no less_talkative agent");
}

std::vector<WordTiming> auto_word_timings(std::string_view text, Timestamp start_ms, int wpm) {
  if (wpm <= 0) throw Error(ErrorCode::SchemaError, "speaking_rate_wpm must be positive");
  const Timestamp slot = 60000 / wpm;
  const Timestamp spoken = slot * 4 / 5;
  std::vector<WordTiming> out;
  Timestamp t = start_ms;
  for (auto w : split_words(text)) {
    out.push_back({std::string(w), t, t + spoken});
    t += slot;
  }
  return out;
}

MeetingScript parse_script(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ", column " +
                                            std::to_string(col) + ": invalid JSON");
  }
  if (!doc.is_object()) schema("script", "expected an object");
  reject_unknown(doc,
                 {"topic", "study_replica", "speaking_rate_wpm", "turn_gap_ms", "agents", "lines"},
                 "script");

  MeetingScript s;
  s.topic = req_string(doc, "topic", "script");
  if (const Json* v = opt(doc, "study_replica")) {
    if (!v->is_boolean()) schema("script.study_replica", "expected a boolean");
    s.study_replica = v->get<bool>();
  }
  if (const Json* v = opt(doc, "speaking_rate_wpm")) {
    s.speaking_rate_wpm = static_cast<int>(req_int(*v, "script.speaking_rate_wpm"));
    if (s.speaking_rate_wpm <= 0) schema("script.speaking_rate_wpm", "must be positive");
  }
  if (const Json* v = opt(doc, "turn_gap_ms")) {
    s.turn_gap_ms = req_int(*v, "script.turn_gap_ms");
    if (s.turn_gap_ms < 0) schema("script.turn_gap_ms", "must not be negative");
  }

  const Json* agents = opt(doc, "agents");
  if (!agents || !agents->is_array() || agents->empty()) {
    schema("script.agents", "expected a non-empty array");
  }
  std::set<ParticipantId> ids;
  int less_talkative = 0;
  for (std::size_t i = 0; i < agents->size(); ++i) {
    const std::string where = "agents[" + std::to_string(i) + "]";
    const Json& a = (*agents)[i];
    if (!a.is_object()) schema(where, "expected an object");
    reject_unknown(a, {"id", "role", "name", "color"}, where);
    ScriptAgent agent;
    agent.id = ParticipantId(req_string(a, "id", where));
    if (agent.id.empty()) schema(where + ".id", "must not be empty");
    if (!ids.insert(agent.id).second) schema(where + ".id", "duplicate agent '" + agent.id.str() + "'");
    agent.role = parse_role(req_string(a, "role", where), where + ".role");
    if (agent.role == AgentRole::LessTalkative) ++less_talkative;
    agent.name = opt(a, "name") ? req_string(a, "name", where) : agent.id.str();
    agent.color = opt(a, "color") ? req_string(a, "color", where) : std::string{};
    s.agents.push_back(std::move(agent));
  }
  if (less_talkative != 1) {
    schema("script.agents", "exactly one less_talkative agent required, found " +
                                std::to_string(less_talkative));
  }

  const Json* lines = opt(doc, "lines");
  if (!lines || !lines->is_array() || lines->empty()) {
    schema("script.lines", "expected a non-empty array");
  }
  std::map<ParticipantId, Timestamp> speaker_end;
  Timestamp prev_end = -s.turn_gap_ms;
  Timestamp prev_start = 0;
  for (std::size_t i = 0; i < lines->size(); ++i) {
    const std::string where = "lines[" + std::to_string(i) + "]";
    const Json& l = (*lines)[i];
    if (!l.is_object()) schema(where, "expected an object");
    reject_unknown(l, {"speaker", "text", "start_ms", "words"}, where);
    ScriptLine line;
    line.speaker = ParticipantId(req_string(l, "speaker", where));
    if (!ids.contains(line.speaker)) {
      schema(where + ".speaker", "unknown agent '" + line.speaker.str() + "'");
    }
    line.text = req_string(l, "text", where);
    const auto words = split_words(line.text);
    if (words.empty()) schema(where + ".text", "must contain at least one word");

    std::optional<Timestamp> start;
    if (const Json* v = opt(l, "start_ms")) {
      start = req_int(*v, where + ".start_ms");
      if (*start < 0) schema(where + ".start_ms", "must not be negative");
    }
    if (const Json* w = opt(l, "words")) {
      if (!w->is_array()) schema(where + ".words", "expected an array");
      if (w->size() != words.size()) {
        schema(where + ".words", "has " + std::to_string(w->size()) + " entries but text has " +
                                     std::to_string(words.size()) + " words");
      }
      Timestamp last = -1;
      for (std::size_t k = 0; k < w->size(); ++k) {
        const std::string wk = where + ".words[" + std::to_string(k) + "]";
        const Json& e = (*w)[k];
        if (!e.is_object()) schema(wk, "expected an object");
        reject_unknown(e, {"word", "onset_ms", "offset_ms"}, wk);
        WordTiming t;
        t.word = req_string(e, "word", wk);
        if (t.word != words[k]) schema(wk + ".word", "does not match text word '" + std::string(words[k]) + "'");
        if (!opt(e, "onset_ms")) schema(wk + ".onset_ms", "missing");
        if (!opt(e, "offset_ms")) schema(wk + ".offset_ms", "missing");
        t.onset_ms = req_int(e["onset_ms"], wk + ".onset_ms");
        t.offset_ms = req_int(e["offset_ms"], wk + ".offset_ms");
        if (t.offset_ms < t.onset_ms || t.onset_ms < last) schema(wk, "word timings out of order");
        last = t.offset_ms;
        line.words.push_back(std::move(t));
      }
      if (start && *start > line.words.front().onset_ms) {
        schema(where + ".start_ms", "later than the first word onset");
      }
      line.start_ms = start.value_or(line.words.front().onset_ms);
    } else {
      line.start_ms = start.value_or(prev_end + s.turn_gap_ms);
      line.words = auto_word_timings(line.text, line.start_ms, s.speaking_rate_wpm);
    }

    if (i > 0 && line.start_ms < prev_start) {
      schema(where + ".start_ms", "lines must be ordered by start time");
    }
    if (auto it = speaker_end.find(line.speaker);
        it != speaker_end.end() && line.words.front().onset_ms < it->second) {
      schema(where, "overlaps the previous line of " + line.speaker.str());
    }
    speaker_end[line.speaker] = line.end_ms();
    prev_start = line.start_ms;
    prev_end = std::max(prev_end, line.end_ms());
    s.lines.push_back(std::move(line));
  }

  if (s.study_replica) {
    const Timestamp d = s.duration_ms();
    if (d < kStudyReplicaMinMs || d > kStudyReplicaMaxMs) {
      schema("script", "study_replica scripts must last 10 to 11 minutes, this one lasts " +
                           std::to_string(d) + " ms");
    }
  }
  return s;
}

MeetingScript load_script(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open script " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_script(ss.str());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SchemaError) throw;
    throw Error(ErrorCode::SchemaError, path + ": " + e.what());
  }
}

Json to_json(const MeetingScript& s) {
  Json agents = Json::array();
  for (const auto& a : s.agents) {
    Json j{{"id", a.id.str()}, {"role", to_string(a.role)}, {"name", a.name}};
    if (!a.color.empty()) j["color"] = a.color;
    agents.push_back(std::move(j));
  }
  Json lines = Json::array();
  for (const auto& l : s.lines) {
    Json words = Json::array();
    for (const auto& w : l.words) {
      words.push_back(Json{{"word", w.word}, {"onset_ms", w.onset_ms}, {"offset_ms", w.offset_ms}});
    }
    lines.push_back(Json{{"speaker", l.speaker.str()},
                         {"text", l.text},
                         {"start_ms", l.start_ms},
                         {"words", std::move(words)}});
  }
  return Json{{"topic", s.topic},
              {"study_replica", s.study_replica},
              {"speaking_rate_wpm", s.speaking_rate_wpm},
              {"turn_gap_ms", s.turn_gap_ms},
              {"agents", std::move(agents)},
              {"lines", std::move(lines)}};
}

MeetingScript redistribute_to_seven(const MeetingScript& three) {
  std::map<AgentRole, std::vector<ParticipantId>> pool = {
      {AgentRole::Pro, {ParticipantId("MA1"), ParticipantId("MA4"), ParticipantId("MA7")}},
      {AgentRole::Against, {ParticipantId("MA2"), ParticipantId("MA5"), ParticipantId("MA6")}},
      {AgentRole::LessTalkative, {ParticipantId("MA3")}},
  };
  std::map<AgentRole, int> seen;
  for (const auto& a : three.agents) ++seen[a.role];
  if (three.agents.size() != 3 || seen[AgentRole::Pro] != 1 || seen[AgentRole::Against] != 1) {
    throw Error(ErrorCode::SchemaError,
                "redistribution needs one pro, one against and one less_talkative agent");
  }

  MeetingScript seven = three;
  seven.agents.clear();
  for (int n = 1; n <= 7; ++n) {
    ParticipantId id("MA" + std::to_string(n));
    AgentRole role = AgentRole::LessTalkative;
    for (const auto& [r, ids] : pool) {
      if (std::find(ids.begin(), ids.end(), id) != ids.end()) role = r;
    }
    seven.agents.push_back({id, role, id.str(), std::string(kSevenColors[n - 1])});
  }

  std::map<AgentRole, std::size_t> next;
  for (auto& line : seven.lines) {
    const AgentRole role = three.agent(line.speaker)->role;
    const auto& ids = pool.at(role);
    line.speaker = ids[next[role]++ % ids.size()];
  }
  return seven;
}

}  // namespace catchup
