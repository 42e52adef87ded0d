#include "hakkarag/router.hpp"

#include <algorithm>

#include "hakkarag/error.hpp"
#include "hakkarag/kv_config.hpp"
#include "hakkarag/utf8.hpp"

namespace hakkarag {
namespace {

constexpr std::string_view kDefaultPatterns =
    "翻譯\n"
    "客語怎麼說\n"
    "怎麼講\n"
    "translate\n"
    "in Hakka\n"
    "prefix: 翻:\n"
    "prefix: 翻：\n"
    "prefix: tr:\n";

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace

std::string_view to_string(Route route) {
  switch (route) {
    case Route::translation: return "translation";
    case Route::cultural_kb: return "cultural_kb";
    case Route::web_search: return "web_search";
  }
  return "unknown";
}

std::optional<Route> route_from_string(std::string_view name) {
  for (auto r : {Route::translation, Route::cultural_kb, Route::web_search}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view to_string(RouteRationale rationale) {
  switch (rationale) {
    case RouteRationale::pattern_match: return "pattern_match";
    case RouteRationale::kb_similarity: return "kb_similarity";
    case RouteRationale::fallback: return "fallback";
  }
  return "unknown";
}

TranslationPatterns TranslationPatterns::parse(std::string_view text) {
  TranslationPatterns p;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!utf8::is_valid(line)) {
      throw Error(ErrorCode::InvalidConfig, "pattern is not valid UTF-8", line_no);
    }
    constexpr std::string_view kPrefix = "prefix:";
    if (line.substr(0, kPrefix.size()) == kPrefix) {
      const auto value = trim(line.substr(kPrefix.size()));
      if (value.empty()) throw Error(ErrorCode::InvalidConfig, "empty prefix directive", line_no);
      p.prefixes_.push_back(utf8::ascii_lower(value));
    } else {
      p.substrings_.push_back(utf8::ascii_lower(line));
    }
  }
  return p;
}

TranslationPatterns TranslationPatterns::load(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const Error& e) {
    throw e.with_path(path.string());
  }
}

TranslationPatterns TranslationPatterns::defaults() { return parse(kDefaultPatterns); }

bool TranslationPatterns::matches(std::string_view query) const {
  const auto q = utf8::ascii_lower(query);
  const auto lead = trim(q);
  for (const auto& s : substrings_) {
    if (q.find(s) != std::string::npos) return true;
  }
  for (const auto& p : prefixes_) {
    if (lead.substr(0, p.size()) == p) return true;
  }
  return false;
}

bool detect_translation_intent(std::string_view query, const TranslationPatterns& patterns) {
  return patterns.matches(query);
}

RouteDecision route_query(std::string_view query, const TranslationPatterns& patterns,
                          const VectorIndex& index, const Embedder& embedder, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(ErrorCode::InvalidParams, "tau must lie in [0, 1]");
  }
  if (trim(query).empty()) throw Error(ErrorCode::EmptyInput, "query is empty");

  if (detect_translation_intent(query, patterns)) {
    return RouteDecision{Route::translation, 1.0, RouteRationale::pattern_match, std::nullopt};
  }
  const auto hits = search_topk(index, query, 1, embedder);
  const double top = hits.empty() ? 0.0 : hits.front().score;
  if (!hits.empty() && top >= tau) {
    return RouteDecision{Route::cultural_kb, std::clamp(top, 0.0, 1.0),
                         RouteRationale::kb_similarity, top};
  }
  return RouteDecision{Route::web_search, std::clamp(1.0 - top, 0.0, 1.0),
                       RouteRationale::fallback, top};
}

}  // namespace hakkarag
