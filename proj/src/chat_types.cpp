#include "hakkarag/chat_types.hpp"

#include <cstdio>
#include <ctime>

#include "hakkarag/error.hpp"

namespace hakkarag {

using nlohmann::json;

std::string_view to_string(Author author) {
  return author == Author::user ? "user" : "assistant";
}

std::string format_utc_ms(std::int64_t epoch_ms) {
  const std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000);
  const int ms = static_cast<int>(epoch_ms % 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
  return buf;
}

json to_json(const RouteDecision& d) {
  json j = {{"route", to_string(d.route)},
            {"confidence", d.confidence},
            {"rationale", to_string(d.rationale)}};
  if (d.top_similarity) j["top_similarity"] = *d.top_similarity;
  return j;
}

json to_json(const Citation& c) {
  return {{"id", c.id}, {"source_kind", c.source_kind}, {"ref", c.ref}, {"quote", c.quote}};
}

json to_json(const AnswerEnvelope& e) {
  json citations = json::array();
  for (const auto& c : e.citations) citations.push_back(to_json(c));
  json j = {{"answer", e.answer},
            {"route", to_string(e.route)},
            {"citations", std::move(citations)},
            {"latency_ms", e.latency_ms},
            {"degraded", nullptr}};
  if (e.degraded) j["degraded"] = {{"reason", e.degraded->reason}, {"detail", e.degraded->detail}};
  return j;
}

json to_json(const ChatMessage& m) {
  json j = {{"turn", m.turn}, {"author", to_string(m.author)}, {"text", m.text}};
  if (m.envelope) j["envelope"] = to_json(*m.envelope);
  return j;
}

json to_json(const ChatSession& s) {
  json messages = json::array();
  for (const auto& m : s.messages) messages.push_back(to_json(m));
  return {{"session_id", s.session_id},
          {"created_at", format_utc_ms(s.created_at_ms)},
          {"created_at_ms", s.created_at_ms},
          {"hakka_reply", s.hakka_reply},
          {"messages", std::move(messages)}};
}

json to_json(const SessionSummary& s) {
  return {{"session_id", s.session_id},
          {"created_at", format_utc_ms(s.created_at_ms)},
          {"message_count", s.message_count}};
}

namespace {

Route parse_route(const json& j) {
  const auto r = route_from_string(j.get<std::string>());
  if (!r) throw Error(ErrorCode::InvalidParams, "unknown route " + j.dump());
  return *r;
}

}  // namespace

RouteDecision route_decision_from_json(const json& j) {
  RouteDecision d;
  d.route = parse_route(j.at("route"));
  d.confidence = j.at("confidence").get<double>();
  const auto rationale = j.at("rationale").get<std::string>();
  if (rationale == "pattern_match") {
    d.rationale = RouteRationale::pattern_match;
  } else if (rationale == "kb_similarity") {
    d.rationale = RouteRationale::kb_similarity;
  } else if (rationale == "fallback") {
    d.rationale = RouteRationale::fallback;
  } else {
    throw Error(ErrorCode::InvalidParams, "unknown rationale " + rationale);
  }
  if (j.contains("top_similarity")) d.top_similarity = j["top_similarity"].get<double>();
  return d;
}

AnswerEnvelope envelope_from_json(const json& j) {
  AnswerEnvelope e;
  e.answer = j.at("answer").get<std::string>();
  e.route = parse_route(j.at("route"));
  for (const auto& c : j.at("citations")) {
    e.citations.push_back({c.at("id").get<std::string>(), c.at("source_kind").get<std::string>(),
                           c.at("ref").get<std::string>(), c.at("quote").get<std::string>()});
  }
  e.latency_ms = j.at("latency_ms").get<std::int64_t>();
  if (const auto& d = j.at("degraded"); !d.is_null()) {
    e.degraded = Degraded{d.at("reason").get<std::string>(), d.at("detail").get<std::string>()};
  }
  return e;
}

ChatMessage message_from_json(const json& j) {
  ChatMessage m;
  m.turn = j.at("turn").get<std::size_t>();
  const auto author = j.at("author").get<std::string>();
  if (author != "user" && author != "assistant") {
    throw Error(ErrorCode::InvalidParams, "unknown author " + author);
  }
  m.author = author == "user" ? Author::user : Author::assistant;
  m.text = j.at("text").get<std::string>();
  if (j.contains("envelope")) m.envelope = envelope_from_json(j["envelope"]);
  return m;
}

}  // namespace hakkarag
