#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hakkarag {

// The five curated knowledge sources.
enum class SourceKind {
  encyclopedia,
  moe_knowledge_base,
  dictionary,
  characteristic_words,
  gazetteer,
};

inline constexpr std::array<SourceKind, 5> kAllSourceKinds = {
    SourceKind::encyclopedia, SourceKind::moe_knowledge_base, SourceKind::dictionary,
    SourceKind::characteristic_words, SourceKind::gazetteer};

std::string_view to_string(SourceKind kind);
std::optional<SourceKind> source_kind_from_string(std::string_view name);

// Dictionary and characteristic-word entries are never split across chunks.
bool is_atomic(SourceKind kind);

struct Document {
  std::string id;  // "<source_kind>:<source-local key>"
  SourceKind source = SourceKind::encyclopedia;
  std::string title;
  std::string body;  // normalized
  std::optional<std::string> headword;  // dictionary / characteristic_words
  std::optional<std::string> region;    // gazetteer
  std::map<std::string, std::string> metadata;

  bool operator==(const Document&) const = default;
};

// Character span in Unicode scalar values over the normalized body.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const CharSpan&) const = default;
};

struct Chunk {
  std::string doc_id;
  std::size_t seq = 0;
  std::string text;
  CharSpan span;

  bool operator==(const Chunk&) const = default;
};

struct ChunkParams {
  std::size_t max_chars = 512;
  std::size_t overlap = 64;

  bool operator==(const ChunkParams&) const = default;
};

struct CorpusStats {
  std::map<SourceKind, std::size_t> documents_by_source;
  std::size_t documents = 0;
  std::size_t chunks = 0;

  bool operator==(const CorpusStats&) const = default;
};

// Immutable once built. Documents are sorted by id; chunks by (doc_id, seq).
struct Corpus {
  std::vector<Document> documents;
  std::vector<Chunk> chunks;
  ChunkParams params;
  CorpusStats stats;

  const Document* find_document(std::string_view id) const;
  const Chunk* find_chunk(std::string_view doc_id, std::size_t seq) const;

  bool operator==(const Corpus&) const = default;
};

// Unifies line endings to \n, collapses runs of horizontal whitespace to one
// space, strips each line, and drops leading/trailing blank lines.
std::string normalize_text(std::string_view raw);

// "<kind>:<key>" with '%', '#' and '@' percent-escaped inside key components.
std::string escape_key_component(std::string_view component);

// Tab-separated sources. `origin` is used only in error messages.
std::vector<Document> parse_dictionary(std::istream& in, const std::string& origin = {});
std::vector<Document> parse_characteristic_words(std::istream& in,
                                                 const std::string& origin = {});
std::vector<Document> parse_gazetteer(std::istream& in, const std::string& origin = {});

// One JSON object per line with string fields key, title, body.
// `kind` must be encyclopedia or moe_knowledge_base.
std::vector<Document> parse_articles(std::istream& in, SourceKind kind,
                                     const std::string& origin = {});

std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_chars,
                                  std::size_t overlap);

struct CorpusManifest {
  std::map<SourceKind, std::filesystem::path> sources;
  ChunkParams params;

  static CorpusManifest load(const std::filesystem::path& path);
  static CorpusManifest parse(std::string_view text, const std::filesystem::path& base_dir,
                              const std::string& origin = {});
};

// All-or-nothing: either every source parses and chunks, or an Error is
// thrown and nothing is returned.
Corpus ingest_corpus(const CorpusManifest& manifest);
Corpus ingest_corpus(const std::filesystem::path& manifest_path);

// Builds a corpus from already parsed documents (sorts, chunks, counts).
Corpus assemble_corpus(std::vector<Document> documents, ChunkParams params);

// Versioned binary corpus snapshot. See docs in README ("Corpus snapshot").
std::string serialize_corpus(const Corpus& corpus);
Corpus deserialize_corpus(std::string_view bytes);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace hakkarag
