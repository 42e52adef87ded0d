#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakkarag/embed_index.hpp"

namespace hakkarag {

enum class Route { translation, cultural_kb, web_search };

enum class RouteRationale { pattern_match, kb_similarity, fallback };

std::string_view to_string(Route route);
std::optional<Route> route_from_string(std::string_view name);
std::string_view to_string(RouteRationale rationale);

struct RouteDecision {
  Route route = Route::web_search;
  double confidence = 0.0;  // advisory, for display only
  RouteRationale rationale = RouteRationale::fallback;
  std::optional<double> top_similarity;  // set whenever the KB check ran

  bool operator==(const RouteDecision&) const = default;
};

// Pattern file format, UTF-8, one pattern per line:
//   # comment
//   翻譯              literal substring
//   prefix: tr:       query (after leading whitespace) starts with "tr:"
// ASCII letters match case-insensitively.
class TranslationPatterns {
 public:
  static TranslationPatterns parse(std::string_view text);
  static TranslationPatterns load(const std::filesystem::path& path);
  static TranslationPatterns defaults();

  bool matches(std::string_view query) const;

  const std::vector<std::string>& substrings() const { return substrings_; }
  const std::vector<std::string>& prefixes() const { return prefixes_; }

 private:
  std::vector<std::string> substrings_;
  std::vector<std::string> prefixes_;
};

inline constexpr double kDefaultTau = 0.25;

bool detect_translation_intent(std::string_view query, const TranslationPatterns& patterns);

// Translation patterns first, then KB similarity against tau, then web
// search. Throws EmptyInput for blank queries and InvalidParams for tau
// outside [0, 1]; index and embedder errors propagate.
RouteDecision route_query(std::string_view query, const TranslationPatterns& patterns,
                          const VectorIndex& index, const Embedder& embedder,
                          double tau = kDefaultTau);

}  // namespace hakkarag
