#include "hakkarag/chat_service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "hakkarag/error.hpp"
#include "hakkarag/utf8.hpp"

namespace hakkarag {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string new_session_id() {
  thread_local std::random_device rd;
  char buf[33];
  for (int i = 0; i < 4; ++i) std::snprintf(buf + 8 * i, 9, "%08x", rd());
  return std::string(buf, 32);
}

std::int64_t system_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string apology(std::string_view reason) {
  if (reason == "translation_failed") return "抱歉，翻譯服務暫時無法處理這個請求，請稍後再試。";
  if (reason == "search_failed") return "抱歉，網路搜尋服務暫時無法使用，請稍後再試。";
  if (reason == "no_search_results") return "抱歉，找不到與這個問題相關的網路資料。";
  if (reason == "completion_failed") return "抱歉，語言模型服務暫時無法回應，請稍後再試。";
  return "抱歉，服務暫時無法回答這個問題，請稍後再試。";
}

std::string erase_all(std::string s, std::string_view needle) {
  if (needle.empty()) return s;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos)) {
    s.erase(pos, needle.size());
  }
  return s;
}

std::string status_name(const Embedder& embedder) {
  if (const auto* http = dynamic_cast<const HttpEmbedder*>(&embedder)) {
    return std::string(to_string(http->status()));
  }
  return std::string(to_string(ProviderStatus::stub));
}

}  // namespace

std::string extract_translation_payload(std::string_view query,
                                        const TranslationPatterns& patterns) {
  const auto q = trim(query);
  static constexpr std::pair<std::string_view, std::string_view> kQuotes[] = {
      {"『", "』"}, {"「", "」"}, {"“", "”"}, {"\"", "\""}};
  for (const auto& [open, close] : kQuotes) {
    const auto b = q.find(open);
    if (b == std::string_view::npos) continue;
    const auto e = q.find(close, b + open.size());
    if (e == std::string_view::npos) continue;
    const auto inner = trim(q.substr(b + open.size(), e - b - open.size()));
    if (!inner.empty()) return std::string(inner);
  }

  const auto fw = q.find("：");
  const auto ascii = q.find(':');
  const auto colon = std::min(fw, ascii);
  if (colon != std::string_view::npos) {
    const auto after = trim(q.substr(colon + (colon == fw ? std::string_view("：").size() : 1)));
    if (!after.empty()) return std::string(after);
  }

  std::string rest(q);
  for (const auto& p : patterns.substrings()) {
    // Patterns match ASCII case-insensitively; strip them the same way.
    std::string lowered = utf8::ascii_lower(rest);
    const auto needle = utf8::ascii_lower(p);
    for (auto pos = lowered.find(needle); pos != std::string::npos; pos = lowered.find(needle)) {
      rest.erase(pos, needle.size());
      lowered.erase(pos, needle.size());
    }
  }
  for (const auto* mark : {"？", "?", "。", "！", "!"}) rest = erase_all(rest, mark);
  const auto t = trim(rest);
  return t.empty() ? std::string(q) : std::string(t);
}

TranslationDirection detect_direction(std::string_view query) {
  const auto q = utf8::ascii_lower(query);
  for (const auto* marker : {"成華語", "成國語", "成中文", "成普通話", "to mandarin", "into mandarin",
                             "to chinese", "into chinese"}) {
    if (q.find(marker) != std::string::npos) return TranslationDirection::hakka_to_mandarin;
  }
  return TranslationDirection::mandarin_to_hakka;
}

std::string strip_dangling_citations(std::string_view answer,
                                     const std::vector<std::string>& known_ids) {
  std::string out;
  out.reserve(answer.size());
  std::size_t i = 0;
  while (i < answer.size()) {
    if (answer[i] == '[') {
      std::size_t j = i + 1;
      while (j < answer.size() && answer[j] >= '0' && answer[j] <= '9') ++j;
      if (j > i + 1 && j < answer.size() && answer[j] == ']') {
        const auto id = answer.substr(i + 1, j - i - 1);
        if (std::find(known_ids.begin(), known_ids.end(), id) == known_ids.end()) {
          i = j + 1;
          continue;
        }
      }
    }
    out.push_back(answer[i++]);
  }
  return out;
}

ChatService::ChatService(ServiceDeps deps) : deps_(std::move(deps)) {
  if (!deps_.knowledge || !deps_.embedder || !deps_.translator || !deps_.search ||
      !deps_.completion) {
    throw Error(ErrorCode::InvalidConfig, "chat service needs knowledge, embedder and providers");
  }
  if (deps_.knowledge->index.embedder_id() != deps_.embedder->id()) {
    throw Error(ErrorCode::EmbedderMismatch, "index built with " +
                                                 deps_.knowledge->index.embedder_id() +
                                                 ", service embedder is " + deps_.embedder->id());
  }
  if (deps_.settings.tau < 0.0 || deps_.settings.tau > 1.0) {
    throw Error(ErrorCode::InvalidParams, "tau must be in [0, 1]");
  }
  if (deps_.settings.k == 0) throw Error(ErrorCode::InvalidParams, "k must be positive");
  if (deps_.settings.n == 0 || deps_.settings.n > WebSearch::kMaxResults) {
    throw Error(ErrorCode::InvalidParams, "n must be in [1, 10]");
  }
  deps_.tmpl.validate();
  if (!deps_.store) deps_.store = std::make_shared<SessionStore>();
  if (!deps_.wall_clock) deps_.wall_clock = system_ms;
  if (!deps_.steady_clock) deps_.steady_clock = steady_ms;
}

std::string ChatService::create_session(bool hakka_reply) {
  ChatSession s;
  s.session_id = new_session_id();
  s.created_at_ms = deps_.wall_clock();
  s.hakka_reply = hakka_reply;
  deps_.store->create(s);
  return s.session_id;
}

ChatSession ChatService::get_session(const std::string& session_id) const {
  auto s = deps_.store->get(session_id);
  if (!s) throw Error(ErrorCode::UnknownSession, "no session " + session_id);
  return *std::move(s);
}

std::vector<SessionSummary> ChatService::list_sessions(std::size_t page,
                                                       std::size_t page_size) const {
  return deps_.store->list(page, page_size);
}

std::shared_ptr<std::mutex> ChatService::session_lock(const std::string& session_id) {
  std::lock_guard lock(locks_mutex_);
  auto& m = session_locks_[session_id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

std::shared_ptr<const KnowledgeSnapshot> ChatService::knowledge() const {
  std::lock_guard lock(knowledge_mutex_);
  return deps_.knowledge;
}

void ChatService::swap_knowledge(std::shared_ptr<const KnowledgeSnapshot> knowledge) {
  if (!knowledge) throw Error(ErrorCode::InvalidParams, "null knowledge snapshot");
  if (knowledge->index.embedder_id() != deps_.embedder->id()) {
    throw Error(ErrorCode::EmbedderMismatch,
                "snapshot index built with " + knowledge->index.embedder_id());
  }
  std::lock_guard lock(knowledge_mutex_);
  deps_.knowledge = std::move(knowledge);
}

RouteDecision ChatService::preview_route(std::string_view text, std::optional<double> tau) const {
  const auto q = normalize_text(text);
  return route_query(q, deps_.patterns, knowledge()->index, *deps_.embedder,
                     tau.value_or(deps_.settings.tau));
}

AnswerEnvelope ChatService::handle_turn(const std::string& session_id,
                                        std::string_view user_text) {
  return handle_turn_traced(session_id, user_text).envelope;
}

TurnTrace ChatService::handle_turn_traced(const std::string& session_id,
                                          std::string_view user_text) {
  const auto query = normalize_text(user_text);
  if (query.empty()) throw Error(ErrorCode::EmptyInput, "user text is empty");

  TurnTrace trace;
  trace.session_id = session_id.empty() ? create_session() : session_id;
  const auto lock_handle = session_lock(trace.session_id);
  std::lock_guard session_guard(*lock_handle);
  const auto session = get_session(trace.session_id);

  const auto started = deps_.steady_clock();
  const auto know = knowledge();
  auto& env = trace.envelope;
  std::optional<Degraded> degraded;
  // The first failure names the reason; later ones only extend the detail.
  const auto fail = [&](std::string reason, const std::string& detail) {
    if (degraded) {
      degraded->detail += "; " + reason + ": " + detail;
    } else {
      degraded = Degraded{std::move(reason), detail};
    }
  };

  try {
    trace.decision = route_query(query, deps_.patterns, know->index, *deps_.embedder,
                                 deps_.settings.tau);
  } catch (const std::exception& e) {
    // Embedder down: the KB check cannot run, so fall through to the web.
    trace.decision = RouteDecision{Route::web_search, 0.0, RouteRationale::fallback, std::nullopt};
    fail("retrieval_failed", e.what());
  }
  env.route = trace.decision.route;

  std::vector<ContextCandidate> candidates;
  std::optional<std::string> translation;
  bool stop = false;  // a provider failure left nothing to answer from
  switch (trace.decision.route) {
    case Route::translation:
      try {
        translation = deps_.translator->translate(
            {extract_translation_payload(query, deps_.patterns), detect_direction(query)});
      } catch (const std::exception& e) {
        fail("translation_failed", e.what());
        stop = true;
      }
      break;
    case Route::cultural_kb:
      try {
        const auto hits = search_topk(know->index, query, deps_.settings.k, *deps_.embedder);
        candidates = candidates_from_hits(hits, know->corpus);
      } catch (const std::exception& e) {
        fail("retrieval_failed", e.what());
        stop = true;
      }
      break;
    case Route::web_search:
      try {
        for (const auto& r : deps_.search->search(query, deps_.settings.n)) {
          candidates.push_back({"web", r.url, normalize_text(r.title + "\n" + r.snippet)});
        }
        if (candidates.empty()) {
          fail("no_search_results", "search returned no results");
          stop = true;
        }
      } catch (const std::exception& e) {
        fail("search_failed", e.what());
        stop = true;
      }
      break;
  }

  if (!stop) {
    AssembleOptions options;
    options.context_budget = deps_.settings.context_budget;
    options.reply_in_hakka = session.hakka_reply;
    trace.bundle = assemble(deps_.tmpl, trace.decision, candidates, translation, query, options);
    trace.prompt = render(*trace.bundle);
    try {
      const auto completion = deps_.completion->complete(trace.prompt);
      std::vector<std::string> ids;
      for (const auto& c : trace.bundle->retrieved) {
        ids.push_back(c.citation_id);
        env.citations.push_back({c.citation_id, c.source_kind, c.ref, c.text});
      }
      env.answer = strip_dangling_citations(completion.text, ids);
    } catch (const std::exception& e) {
      fail("completion_failed", e.what());
      stop = true;
    }
  }

  if (stop) {
    env.answer = apology(degraded->reason);
    env.citations.clear();
  }
  env.degraded = degraded;
  env.latency_ms = std::max<std::int64_t>(0, deps_.steady_clock() - started);

  ChatMessage user{session.messages.size(), Author::user, query, std::nullopt};
  ChatMessage assistant{session.messages.size() + 1, Author::assistant, env.answer, env};
  deps_.store->append_turn(trace.session_id, user, assistant);
  return trace;
}

json ChatService::health() const {
  const auto know = knowledge();
  json by_source = json::object();
  for (const auto& [kind, count] : know->corpus.stats.documents_by_source) {
    by_source[std::string(to_string(kind))] = count;
  }
  return {{"status", "ok"},
          {"corpus_stats",
           {{"documents", know->corpus.stats.documents},
            {"chunks", know->corpus.stats.chunks},
            {"documents_by_source", std::move(by_source)},
            {"index_entries", know->index.size()},
            {"embedder", know->index.embedder_id()}}},
          {"providers",
           {{"translation", to_string(deps_.translator->status())},
            {"search", to_string(deps_.search->status())},
            {"completion", to_string(deps_.completion->status())},
            {"embedder", status_name(*deps_.embedder)}}}};
}

// ---------------------------------------------------------------------------

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  const auto kv = KvConfig::load(path);
  const auto& root = kv.root();
  root.require_known({"snapshot", "index", "patterns", "template", "store", "listen", "tau", "k",
                      "n", "context_budget"});
  ServiceConfig c;
  const auto snapshot = root.get("snapshot");
  if (!snapshot) {
    throw Error(ErrorCode::InvalidConfig, "missing key 'snapshot'", std::nullopt, path.string());
  }
  c.snapshot = kv.resolve(*snapshot);
  c.index = root.get("index") ? kv.resolve(*root.get("index"))
                              : std::filesystem::path(c.snapshot.string() + ".idx");
  if (auto v = root.get("patterns")) c.patterns = kv.resolve(*v);
  if (auto v = root.get("template")) c.prompt_template = kv.resolve(*v);
  if (auto v = root.get("store")) c.store = kv.resolve(*v);
  if (auto v = root.get("listen")) {
    const auto colon = v->rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "listen must be host:port", std::nullopt,
                  path.string());
    }
    c.listen_host = v->substr(0, colon);
    try {
      c.listen_port = std::stoi(v->substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "bad listen port in " + *v, std::nullopt,
                  path.string());
    }
  }
  c.settings.tau = root.get_double("tau", c.settings.tau);
  const auto positive = [&](const char* key, std::size_t fallback) {
    const auto v = root.get_int(key, static_cast<long long>(fallback));
    if (v <= 0) {
      throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be positive", std::nullopt,
                  path.string());
    }
    return static_cast<std::size_t>(v);
  };
  c.settings.k = positive("k", c.settings.k);
  c.settings.n = positive("n", c.settings.n);
  c.settings.context_budget = positive("context_budget", c.settings.context_budget);

  for (const auto& name : kv.section_names()) {
    if (name.empty()) continue;
    if (name.rfind("provider.", 0) != 0) {
      throw Error(ErrorCode::InvalidConfig, "unknown section [" + name + "]", std::nullopt,
                  path.string());
    }
    const auto provider = name.substr(9);
    if (provider != "translation" && provider != "search" && provider != "completion" &&
        provider != "embedder") {
      throw Error(ErrorCode::InvalidConfig, "unknown provider [" + name + "]", std::nullopt,
                  path.string());
    }
    c.providers.emplace(provider, *kv.section(name));
  }
  // Paths inside provider blocks resolve like root paths.
  for (auto& [name, section] : c.providers) {
    for (const auto* key : {"lexicon", "fixture"}) {
      if (auto v = section.get(key)) {
        section.set(key, kv.resolve(*v).string(), section.entries().at(key).line);
      }
    }
  }
  return c;
}

namespace {

HttpProviderOptions http_options(const std::string& name, const KvSection& s) {
  HttpProviderOptions o;
  const auto endpoint = s.get("endpoint");
  if (!endpoint) throw Error(ErrorCode::InvalidConfig, "[provider." + name + "] needs endpoint");
  o.endpoint = *endpoint;
  o.timeout = std::chrono::milliseconds(s.get_int("timeout_ms", 10000));
  if (auto env = s.get("api_key_env")) {
    const char* key = std::getenv(env->c_str());
    if (!key || !*key) {
      throw Error(ErrorCode::InvalidConfig,
                  "[provider." + name + "] environment variable " + *env + " is not set");
    }
    o.api_key = key;
  }
  return o;
}

const KvSection& provider_section(const ServiceConfig& c, const std::string& name) {
  const auto it = c.providers.find(name);
  if (it == c.providers.end()) {
    throw Error(ErrorCode::InvalidConfig, "missing [provider." + name + "] section");
  }
  return it->second;
}

std::string required(const KvSection& s, const std::string& name, const std::string& key) {
  auto v = s.get(key);
  if (!v) throw Error(ErrorCode::InvalidConfig, "[provider." + name + "] needs " + key);
  return *v;
}

}  // namespace

ServiceDeps build_deps(const ServiceConfig& c) {
  ServiceDeps d;
  auto know = std::make_shared<KnowledgeSnapshot>();
  know->corpus = load_corpus(c.snapshot);
  know->index = load_index(c.index);
  d.knowledge = std::move(know);
  d.settings = c.settings;
  if (c.patterns) d.patterns = TranslationPatterns::load(*c.patterns);
  if (c.prompt_template) d.tmpl = PromptTemplate::load(*c.prompt_template);
  d.store = c.store ? std::make_shared<SessionStore>(*c.store) : std::make_shared<SessionStore>();

  {
    const auto& s = provider_section(c, "translation");
    s.require_known({"kind", "lexicon", "endpoint", "timeout_ms", "api_key_env"});
    const auto kind = s.get_or("kind", "stub");
    if (kind == "stub") {
      d.translator = std::make_shared<LexiconTranslator>(
          LexiconTranslator::load(required(s, "translation", "lexicon")));
    } else if (kind == "http") {
      d.translator = std::make_shared<HttpTranslator>(http_options("translation", s));
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown translation kind " + kind);
    }
  }
  {
    const auto& s = provider_section(c, "search");
    s.require_known({"kind", "fixture", "endpoint", "timeout_ms", "api_key_env"});
    const auto kind = s.get_or("kind", "stub");
    if (kind == "stub") {
      d.search =
          std::make_shared<CannedSearch>(CannedSearch::load(required(s, "search", "fixture")));
    } else if (kind == "http") {
      d.search = std::make_shared<HttpSearch>(http_options("search", s));
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown search kind " + kind);
    }
  }
  {
    const auto& s = provider_section(c, "completion");
    s.require_known({"kind", "max_prompt_chars", "endpoint", "timeout_ms", "api_key_env"});
    const auto kind = s.get_or("kind", "stub");
    if (kind == "stub") {
      d.completion = std::make_shared<EchoCompletion>(
          static_cast<std::size_t>(s.get_int("max_prompt_chars", 16000)));
    } else if (kind == "http") {
      d.completion = std::make_shared<HttpCompletion>(http_options("completion", s));
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown completion kind " + kind);
    }
  }
  {
    const auto it = c.providers.find("embedder");
    const KvSection empty;
    const auto& s = it == c.providers.end() ? empty : it->second;
    s.require_known({"kind", "dims", "model", "endpoint", "timeout_ms", "api_key_env"});
    const auto kind = s.get_or("kind", "reference");
    const auto dims = s.get_int("dims", static_cast<long long>(ReferenceEmbedder::kDefaultDims));
    if (dims <= 0) throw Error(ErrorCode::InvalidConfig, "embedder dims must be positive");
    if (kind == "reference") {
      d.embedder = std::make_shared<ReferenceEmbedder>(static_cast<std::size_t>(dims));
    } else if (kind == "http") {
      d.embedder = std::make_shared<HttpEmbedder>(http_options("embedder", s),
                                                  required(s, "embedder", "model"),
                                                  static_cast<std::size_t>(dims));
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown embedder kind " + kind);
    }
  }
  return d;
}

}  // namespace hakkarag
