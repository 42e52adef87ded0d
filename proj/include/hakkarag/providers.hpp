#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakkarag/embed_index.hpp"

namespace hakkarag {

// What /api/health reports per provider.
enum class ProviderStatus { up, stub, down };
std::string_view to_string(ProviderStatus status);

enum class TranslationDirection { mandarin_to_hakka, hakka_to_mandarin };
std::string_view to_string(TranslationDirection direction);
std::optional<TranslationDirection> direction_from_string(std::string_view name);

struct TranslationJob {
  std::string text;
  TranslationDirection direction = TranslationDirection::mandarin_to_hakka;
};

struct SearchResult {
  std::string title;
  std::string url;
  std::string snippet;
  std::size_t rank = 0;

  bool operator==(const SearchResult&) const = default;
};

struct TokenUsage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct Completion {
  std::string text;
  std::string provider_id;
  std::optional<TokenUsage> usage;

  bool operator==(const Completion&) const = default;
};

// Provider interfaces. Transport failures surface as
// Error(ProviderUnavailable), never as empty or made-up content.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string id() const = 0;
  virtual ProviderStatus status() const = 0;
  virtual std::string translate(const TranslationJob& job) = 0;
};

class WebSearch {
 public:
  static constexpr std::size_t kMaxResults = 10;

  virtual ~WebSearch() = default;
  virtual std::string id() const = 0;
  virtual ProviderStatus status() const = 0;
  // n in [1, 10]; returns at most n results with ranks 1..m.
  virtual std::vector<SearchResult> search(std::string_view query, std::size_t n) = 0;
};

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual std::string id() const = 0;
  virtual ProviderStatus status() const = 0;
  virtual Completion complete(std::string_view prompt) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic stubs backed by fixture files.

// Bidirectional lexicon (TSV columns `source`, `target`; source is Mandarin).
// Longest-match-first substitution; spans with no entry pass through.
class LexiconTranslator final : public Translator {
 public:
  static LexiconTranslator parse(std::string_view tsv, const std::string& origin = {});
  static LexiconTranslator load(const std::filesystem::path& path);

  std::string id() const override { return "stub-lexicon"; }
  ProviderStatus status() const override { return ProviderStatus::stub; }
  std::string translate(const TranslationJob& job) override;

  std::size_t size() const { return to_hakka_.size(); }
  const std::map<std::u32string, std::u32string>& pairs() const { return to_hakka_; }

 private:
  std::map<std::u32string, std::u32string> to_hakka_;
  std::map<std::u32string, std::u32string> to_mandarin_;
  std::size_t longest_ = 0;
};

// Canned results (JSONL: query, title, url, snippet, rank). A user query
// matches a fixture entry when it contains the fixture query as a substring;
// the longest matching fixture query wins.
class CannedSearch final : public WebSearch {
 public:
  static CannedSearch parse(std::string_view jsonl, const std::string& origin = {});
  static CannedSearch load(const std::filesystem::path& path);

  std::string id() const override { return "stub-canned-search"; }
  ProviderStatus status() const override { return ProviderStatus::stub; }
  std::vector<SearchResult> search(std::string_view query, std::size_t n) override;

 private:
  std::map<std::string, std::vector<SearchResult>> by_query_;
};

// Echo completion: "Q: <question>", then "A: <translation>" when the prompt
// carries a translation block, then "uses [k]" for every context citation.
class EchoCompletion final : public CompletionProvider {
 public:
  explicit EchoCompletion(std::size_t max_prompt_chars = 16000)
      : max_prompt_chars_(max_prompt_chars) {}

  std::string id() const override { return "stub-echo"; }
  ProviderStatus status() const override { return ProviderStatus::stub; }
  Completion complete(std::string_view prompt) override;

 private:
  std::size_t max_prompt_chars_;
};

// ---------------------------------------------------------------------------
// HTTP adapters. Request and response schemas are this project's own; see
// README ("Provider HTTP contracts"). Credentials come from the environment.

struct HttpProviderOptions {
  std::string endpoint;  // http://host:port/path
  std::chrono::milliseconds timeout{10000};
  std::string api_key;   // sent as "Authorization: Bearer <key>" when set
  // One retry after this delay for idempotent calls (translate, search,
  // embed); completion never retries.
  std::chrono::milliseconds retry_backoff{500};
};

// Shared plumbing for the adapters; tracks the outcome of the last call.
class HttpProviderBase {
 public:
  explicit HttpProviderBase(HttpProviderOptions options);

  ProviderStatus last_status() const {
    return healthy_.load() ? ProviderStatus::up : ProviderStatus::down;
  }

 protected:
  struct Reply {
    int status = 0;
    std::string body;
  };

  // POSTs a JSON body. Transport errors and 5xx become ProviderUnavailable
  // (after the single retry when `idempotent`), 429 becomes QuotaExceeded and
  // 413 ContextTooLong; other statuses are returned to the caller.
  Reply post_json(const std::string& body, bool idempotent) const;

  // Parses a 2xx reply body as JSON text; anything else is ProviderUnavailable.
  static std::string expect_ok(const Reply& reply, std::string_view what);
  void mark(bool ok) const { healthy_.store(ok); }

  const HttpProviderOptions& options() const { return options_; }

 private:
  HttpProviderOptions options_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  mutable std::atomic<bool> healthy_{true};
};

class HttpTranslator final : public Translator, private HttpProviderBase {
 public:
  explicit HttpTranslator(HttpProviderOptions options) : HttpProviderBase(std::move(options)) {}
  std::string id() const override { return "http-translation"; }
  ProviderStatus status() const override { return last_status(); }
  std::string translate(const TranslationJob& job) override;
};

class HttpSearch final : public WebSearch, private HttpProviderBase {
 public:
  explicit HttpSearch(HttpProviderOptions options) : HttpProviderBase(std::move(options)) {}
  std::string id() const override { return "http-search"; }
  ProviderStatus status() const override { return last_status(); }
  std::vector<SearchResult> search(std::string_view query, std::size_t n) override;
};

class HttpCompletion final : public CompletionProvider, private HttpProviderBase {
 public:
  explicit HttpCompletion(HttpProviderOptions options) : HttpProviderBase(std::move(options)) {}
  std::string id() const override { return "http-completion"; }
  ProviderStatus status() const override { return last_status(); }
  Completion complete(std::string_view prompt) override;
};

class HttpEmbedder final : public Embedder, private HttpProviderBase {
 public:
  HttpEmbedder(HttpProviderOptions options, std::string model_id, std::size_t dims);
  std::string id() const override { return model_id_; }
  std::size_t dims() const override { return dims_; }
  EmbeddingVector embed(std::string_view text) const override;
  ProviderStatus status() const { return last_status(); }

 private:
  std::string model_id_;
  std::size_t dims_;
};

}  // namespace hakkarag
