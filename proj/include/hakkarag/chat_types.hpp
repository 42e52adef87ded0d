#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hakkarag/router.hpp"

namespace hakkarag {

struct Citation {
  std::string id;           // "1", "2", ... as used in the answer text
  std::string source_kind;  // SourceKind name or "web"
  std::string ref;          // doc_id or url
  std::string quote;        // the chunk text or snippet given to the model

  bool operator==(const Citation&) const = default;
};

struct Degraded {
  std::string reason;  // machine-readable, e.g. "search_failed"
  std::string detail;

  bool operator==(const Degraded&) const = default;
};

struct AnswerEnvelope {
  std::string answer;
  Route route = Route::web_search;
  std::vector<Citation> citations;
  std::int64_t latency_ms = 0;
  std::optional<Degraded> degraded;

  bool operator==(const AnswerEnvelope&) const = default;
};

enum class Author { user, assistant };
std::string_view to_string(Author author);

struct ChatMessage {
  std::size_t turn = 0;  // position in the session, from 0
  Author author = Author::user;
  std::string text;
  std::optional<AnswerEnvelope> envelope;  // assistant messages only

  bool operator==(const ChatMessage&) const = default;
};

struct ChatSession {
  std::string session_id;
  std::int64_t created_at_ms = 0;  // UTC
  bool hakka_reply = false;        // ask the model to answer in Hakka
  std::vector<ChatMessage> messages;

  bool operator==(const ChatSession&) const = default;
};

struct SessionSummary {
  std::string session_id;
  std::int64_t created_at_ms = 0;
  std::size_t message_count = 0;
};

// "2026-10-15T08:30:00.123Z"
std::string format_utc_ms(std::int64_t epoch_ms);

nlohmann::json to_json(const RouteDecision& d);
nlohmann::json to_json(const Citation& c);
nlohmann::json to_json(const AnswerEnvelope& e);
nlohmann::json to_json(const ChatMessage& m);
nlohmann::json to_json(const ChatSession& s);
nlohmann::json to_json(const SessionSummary& s);

// Inverse of to_json; throws nlohmann::json::exception or Error on bad input.
RouteDecision route_decision_from_json(const nlohmann::json& j);
AnswerEnvelope envelope_from_json(const nlohmann::json& j);
ChatMessage message_from_json(const nlohmann::json& j);

}  // namespace hakkarag
