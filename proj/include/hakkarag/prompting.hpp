#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hakkarag/embed_index.hpp"
#include "hakkarag/router.hpp"

namespace hakkarag {

struct PromptTemplate {
  static constexpr std::size_t kLimitationCount = 5;

  std::string role_preamble;
  std::string skill_cultural;
  std::string skill_translation;
  std::vector<std::string> limitations;  // exactly five, in order
  std::string context_header;            // single line
  std::string question_header;           // single line

  // Throws InvalidTemplate when a field is empty, a header spans lines, or
  // the limitation count is not five.
  void validate() const;

  // Sectioned text file: "[role]", "[skill_cultural]", "[skill_translation]",
  // "[limitations]" (one clause per non-empty line, optional "N. " prefix),
  // "[context_header]", "[question_header]". Lines starting with '#' before
  // the first section are comments.
  static PromptTemplate parse(std::string_view text);
  static PromptTemplate load(const std::filesystem::path& path);
  std::string to_text() const;

  bool operator==(const PromptTemplate&) const = default;
};

PromptTemplate default_template();

// One context slot in the prompt: a KB chunk or a web snippet.
struct ContextEntry {
  std::string citation_id;  // "1", "2", ...
  std::string source_kind;  // SourceKind name, or "web"
  std::string ref;          // doc_id for KB chunks, url for web results
  std::string text;

  bool operator==(const ContextEntry&) const = default;
};

// Rank-ordered retrieval material before citation ids are assigned.
struct ContextCandidate {
  std::string source_kind;
  std::string ref;
  std::string text;
};

struct PromptBundle {
  PromptTemplate tmpl;
  Route route = Route::cultural_kb;
  std::vector<ContextEntry> retrieved;
  std::optional<std::string> translation_result;
  std::string user_query;
  std::size_t dropped_context = 0;  // whole candidates dropped for the budget
  bool reply_in_hakka = false;

  bool operator==(const PromptBundle&) const = default;
};

struct AssembleOptions {
  std::size_t context_budget = 4000;  // characters of context text
  bool reply_in_hakka = false;
};

// Resolves retrieval hits to candidates via the corpus (source kind and text).
std::vector<ContextCandidate> candidates_from_hits(std::span<const RetrievalHit> hits,
                                                   const Corpus& corpus);

// Throws InconsistentBundle when the payload does not match the route:
// translation needs translation text and no context; the other routes need
// at least one candidate and no translation. Over-budget context is trimmed
// by dropping whole lowest-ranked candidates, always keeping the first.
PromptBundle assemble(const PromptTemplate& tmpl, const RouteDecision& decision,
                      std::span<const ContextCandidate> candidates,
                      const std::optional<std::string>& translation, std::string_view query,
                      const AssembleOptions& options = {});

std::string render(const PromptBundle& bundle);

}  // namespace hakkarag
