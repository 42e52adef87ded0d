#pragma once

// Shared fixture plumbing for the unit and acceptance binaries.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "hakkarag/chat_service.hpp"
#include "hakkarag/error.hpp"
#include "hakkarag/kb_ingest.hpp"
#include "hakkarag/providers.hpp"

namespace fixtures {

namespace fs = std::filesystem;
namespace hk = hakkarag;

inline fs::path data_dir() { return HAKKARAG_DATA_DIR; }
inline fs::path golden_dir() { return HAKKARAG_GOLDEN_DIR; }
inline fs::path data(const std::string& rel) { return data_dir() / rel; }
inline fs::path golden(const std::string& rel) { return golden_dir() / rel; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("hakkarag-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline std::shared_ptr<const hk::KnowledgeSnapshot> fixture_knowledge() {
  static const auto snapshot = [] {
    auto s = std::make_shared<hk::KnowledgeSnapshot>();
    s->corpus = hk::ingest_corpus(data("manifest.conf"));
    s->index = hk::build_index(s->corpus, hk::ReferenceEmbedder());
    return std::shared_ptr<const hk::KnowledgeSnapshot>(s);
  }();
  return snapshot;
}

// Stub-only deps over the fixture corpus with both clocks pinned.
inline hk::ServiceDeps stub_deps() {
  hk::ServiceDeps d;
  d.knowledge = fixture_knowledge();
  d.embedder = std::make_shared<hk::ReferenceEmbedder>();
  d.translator = std::make_shared<hk::LexiconTranslator>(hk::LexiconTranslator::load(data("lexicon.tsv")));
  d.search = std::make_shared<hk::CannedSearch>(hk::CannedSearch::load(data("search_fixture.jsonl")));
  d.completion = std::make_shared<hk::EchoCompletion>();
  d.patterns = hk::TranslationPatterns::load(data("translation_patterns.txt"));
  d.tmpl = hk::PromptTemplate::load(data("prompt_template.txt"));
  d.wall_clock = [] { return std::int64_t{1'760'000'000'000}; };
  d.steady_clock = [] { return std::int64_t{0}; };
  return d;
}

// Providers that always fail, for degradation tests.
struct DownTranslator final : hk::Translator {
  std::string id() const override { return "down-translation"; }
  hk::ProviderStatus status() const override { return hk::ProviderStatus::down; }
  std::string translate(const hk::TranslationJob&) override {
    throw hk::Error(hk::ErrorCode::ProviderUnavailable, "translation forced down");
  }
};

struct DownSearch final : hk::WebSearch {
  std::string id() const override { return "down-search"; }
  hk::ProviderStatus status() const override { return hk::ProviderStatus::down; }
  std::vector<hk::SearchResult> search(std::string_view, std::size_t) override {
    throw hk::Error(hk::ErrorCode::ProviderUnavailable, "search forced down");
  }
};

struct DownCompletion final : hk::CompletionProvider {
  std::string id() const override { return "down-completion"; }
  hk::ProviderStatus status() const override { return hk::ProviderStatus::down; }
  hk::Completion complete(std::string_view) override {
    throw hk::Error(hk::ErrorCode::ProviderUnavailable, "completion forced down");
  }
};

// Reference embedder for indexing that fails on every query after `arm()`.
struct FlakyEmbedder final : hk::Embedder {
  hk::ReferenceEmbedder inner;
  mutable std::atomic<bool> down{false};
  std::string id() const override { return inner.id(); }
  std::size_t dims() const override { return inner.dims(); }
  hk::EmbeddingVector embed(std::string_view text) const override {
    if (down) throw hk::Error(hk::ErrorCode::ProviderUnavailable, "embedder forced down");
    return inner.embed(text);
  }
};

// The three canonical turns.
inline const char* kTranslationTurn = "請翻譯成客語：謝謝";
inline const char* kWebTurn = "今天天氣如何";
// Verbatim text of the first encyclopedia chunk.
inline std::string cultural_turn() {
  for (const auto& c : fixture_knowledge()->corpus.chunks) {
    if (c.doc_id.rfind("encyclopedia:", 0) == 0) return c.text;
  }
  return {};
}

}  // namespace fixtures

namespace fixtures {

// Compares `actual` against a golden file. With HAKKARAG_UPDATE_GOLDEN=1 the
// file is rewritten instead (review the diff before committing).
inline bool matches_golden(const std::string& name, const std::string& actual) {
  const auto path = golden(name);
  if (const char* u = std::getenv("HAKKARAG_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    spit(path, actual);
    return true;
  }
  return fs::exists(path) && slurp(path) == actual;
}

}  // namespace fixtures
