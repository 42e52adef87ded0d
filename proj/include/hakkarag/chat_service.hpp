#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hakkarag/chat_types.hpp"
#include "hakkarag/embed_index.hpp"
#include "hakkarag/kb_ingest.hpp"
#include "hakkarag/kv_config.hpp"
#include "hakkarag/prompting.hpp"
#include "hakkarag/providers.hpp"
#include "hakkarag/router.hpp"
#include "hakkarag/session_store.hpp"

namespace hakkarag {

struct ServiceSettings {
  double tau = kDefaultTau;
  std::size_t k = 4;  // KB chunks per cultural turn
  std::size_t n = 3;  // web results per web turn
  std::size_t context_budget = 4000;
};

// Corpus and index loaded together; swapped as one unit.
struct KnowledgeSnapshot {
  Corpus corpus;
  VectorIndex index;
};

struct ServiceDeps {
  std::shared_ptr<const KnowledgeSnapshot> knowledge;
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<Translator> translator;
  std::shared_ptr<WebSearch> search;
  std::shared_ptr<CompletionProvider> completion;
  std::shared_ptr<SessionStore> store;
  TranslationPatterns patterns = TranslationPatterns::defaults();
  PromptTemplate tmpl = default_template();
  ServiceSettings settings;
  // Wall clock in UTC milliseconds (session timestamps).
  std::function<std::int64_t()> wall_clock;
  // Monotonic milliseconds (latency). Tests pin both to get stable output.
  std::function<std::int64_t()> steady_clock;
};

// Everything a turn produced, for tests and the CLI.
struct TurnTrace {
  std::string session_id;
  RouteDecision decision;
  std::optional<PromptBundle> bundle;  // absent if the turn degraded before rendering
  std::string prompt;
  AnswerEnvelope envelope;
};

// Text to translate: the span inside 『』 or 「」 quotes, else what follows
// the first full-width or ASCII colon, else the query with the trigger
// phrases and trailing question marks removed.
std::string extract_translation_payload(std::string_view query,
                                        const TranslationPatterns& patterns);
// Hakka to Mandarin when the query asks for Mandarin output ("翻成華語",
// "to Mandarin", ...); Mandarin to Hakka otherwise.
TranslationDirection detect_direction(std::string_view query);
// Removes "[k]" tokens whose k is not in `known_ids`.
std::string strip_dangling_citations(std::string_view answer,
                                     const std::vector<std::string>& known_ids);

class ChatService {
 public:
  explicit ChatService(ServiceDeps deps);

  std::string create_session(bool hakka_reply = false);
  ChatSession get_session(const std::string& session_id) const;
  std::vector<SessionSummary> list_sessions(std::size_t page, std::size_t page_size = 20) const;

  // An empty session_id creates a session first; an unknown one throws
  // UnknownSession. Provider failures yield a degraded envelope, which is
  // persisted like any other turn.
  AnswerEnvelope handle_turn(const std::string& session_id, std::string_view user_text);
  TurnTrace handle_turn_traced(const std::string& session_id, std::string_view user_text);

  RouteDecision preview_route(std::string_view text, std::optional<double> tau = {}) const;

  // {status, corpus_stats, providers: {name: up|stub|down}}
  nlohmann::json health() const;

  void swap_knowledge(std::shared_ptr<const KnowledgeSnapshot> knowledge);
  std::shared_ptr<const KnowledgeSnapshot> knowledge() const;
  const ServiceSettings& settings() const { return deps_.settings; }

 private:
  std::shared_ptr<std::mutex> session_lock(const std::string& session_id);

  ServiceDeps deps_;
  mutable std::mutex knowledge_mutex_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;
};

// ---------------------------------------------------------------------------
// Service configuration (key = value, see README "Service config"):
//
//   snapshot = kb.snap           corpus snapshot; index at <snapshot>.idx
//   index = kb.snap.idx          optional override
//   patterns = translation_patterns.txt
//   template = prompt_template.txt
//   store = sessions.log         omit for memory-only sessions
//   listen = 127.0.0.1:8080
//   tau = 0.25  k = 4  n = 3  context_budget = 4000
//
//   [provider.translation]  kind = stub|http, lexicon = ..., endpoint = ...
//   [provider.search]       kind = stub|http, fixture = ..., endpoint = ...
//   [provider.completion]   kind = stub|http, max_prompt_chars = ..., endpoint = ...
//   [provider.embedder]     kind = reference|http, dims = 256, model = ..., endpoint = ...
//
// HTTP blocks take timeout_ms and api_key_env (the name of an environment
// variable holding the key; keys are never read from the file).
struct ServiceConfig {
  std::filesystem::path snapshot;
  std::filesystem::path index;
  std::optional<std::filesystem::path> patterns;
  std::optional<std::filesystem::path> prompt_template;
  std::optional<std::filesystem::path> store;
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  ServiceSettings settings;
  std::map<std::string, KvSection> providers;  // "translation", "search", ...

  static ServiceConfig load(const std::filesystem::path& path);
};

// Loads snapshots and constructs providers as configured.
ServiceDeps build_deps(const ServiceConfig& config);

}  // namespace hakkarag
