#include "hakkarag/providers.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

#include "hakkarag/error.hpp"
#include "hakkarag/kv_config.hpp"
#include "hakkarag/utf8.hpp"

namespace hakkarag {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

// "[12] (" at the start of a line -> "12"
std::optional<std::string_view> citation_marker(std::string_view line) {
  if (line.size() < 4 || line.front() != '[') return std::nullopt;
  std::size_t i = 1;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i == 1 || i + 2 >= line.size() || line[i] != ']' || line[i + 1] != ' ' ||
      line[i + 2] != '(') {
    return std::nullopt;
  }
  return line.substr(1, i - 1);
}

// Section body lines with the four-space continuation indent removed.
std::string_view unindent(std::string_view line) {
  return line.substr(0, 4) == "    " ? line.substr(4) : line;
}

}  // namespace

std::string_view to_string(ProviderStatus status) {
  switch (status) {
    case ProviderStatus::up: return "up";
    case ProviderStatus::stub: return "stub";
    case ProviderStatus::down: return "down";
  }
  return "down";
}

std::string_view to_string(TranslationDirection direction) {
  return direction == TranslationDirection::mandarin_to_hakka ? "mandarin_to_hakka"
                                                              : "hakka_to_mandarin";
}

std::optional<TranslationDirection> direction_from_string(std::string_view name) {
  if (name == "mandarin_to_hakka") return TranslationDirection::mandarin_to_hakka;
  if (name == "hakka_to_mandarin") return TranslationDirection::hakka_to_mandarin;
  return std::nullopt;
}

LexiconTranslator LexiconTranslator::parse(std::string_view tsv, const std::string& origin) {
  LexiconTranslator t;
  const auto lines = split_lines(tsv);
  std::size_t src_col = 0;
  std::size_t dst_col = 1;
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line_no = i + 1;
    const auto line = lines[i];
    if (line.empty()) continue;
    if (!utf8::is_valid(line)) throw Error(ErrorCode::MalformedRow, "invalid UTF-8", line_no, origin);
    std::vector<std::string> cells;
    std::stringstream ss{std::string(line)};
    for (std::string c; std::getline(ss, c, '\t');) cells.push_back(c);
    if (!have_header) {
      const auto s = std::find(cells.begin(), cells.end(), "source");
      const auto d = std::find(cells.begin(), cells.end(), "target");
      if (s == cells.end() || d == cells.end()) {
        throw Error(ErrorCode::SchemaMismatch, "lexicon header needs 'source' and 'target'",
                    line_no, origin);
      }
      src_col = static_cast<std::size_t>(s - cells.begin());
      dst_col = static_cast<std::size_t>(d - cells.begin());
      have_header = true;
      continue;
    }
    if (std::max(src_col, dst_col) >= cells.size() || cells[src_col].empty() ||
        cells[dst_col].empty()) {
      throw Error(ErrorCode::MalformedRow, "lexicon row needs source and target", line_no, origin);
    }
    auto src = utf8::decode(cells[src_col]);
    auto dst = utf8::decode(cells[dst_col]);
    if (t.to_hakka_.count(src) || t.to_mandarin_.count(dst)) {
      throw Error(ErrorCode::DuplicateEntry, "lexicon pairs must be unique in both directions",
                  line_no, origin);
    }
    t.longest_ = std::max({t.longest_, src.size(), dst.size()});
    t.to_hakka_.emplace(src, dst);
    t.to_mandarin_.emplace(std::move(dst), std::move(src));
  }
  if (!have_header) {
    throw Error(ErrorCode::SchemaMismatch, "lexicon has no header", std::nullopt, origin);
  }
  return t;
}

LexiconTranslator LexiconTranslator::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

std::string LexiconTranslator::translate(const TranslationJob& job) {
  if (job.text.empty()) throw Error(ErrorCode::UntranslatableInput, "nothing to translate");
  const auto& table =
      job.direction == TranslationDirection::mandarin_to_hakka ? to_hakka_ : to_mandarin_;
  const auto in = utf8::decode(job.text);
  std::u32string out;
  std::size_t i = 0;
  while (i < in.size()) {
    bool matched = false;
    for (std::size_t len = std::min(longest_, in.size() - i); len > 0; --len) {
      const auto it = table.find(in.substr(i, len));
      if (it != table.end()) {
        out += it->second;
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(in[i++]);
  }
  return utf8::encode(out);
}

CannedSearch CannedSearch::parse(std::string_view jsonl, const std::string& origin) {
  CannedSearch s;
  const auto lines = split_lines(jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line_no = i + 1;
    if (lines[i].find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(lines[i]);
      SearchResult r;
      r.title = rec.at("title").get<std::string>();
      r.url = rec.at("url").get<std::string>();
      r.snippet = rec.at("snippet").get<std::string>();
      const auto rank = rec.at("rank").get<long long>();
      if (rank < 1) throw Error(ErrorCode::MalformedRecord, "rank must be >= 1", line_no, origin);
      r.rank = static_cast<std::size_t>(rank);
      const auto query = utf8::ascii_lower(rec.at("query").get<std::string>());
      if (query.empty()) throw Error(ErrorCode::MalformedRecord, "empty query", line_no, origin);
      s.by_query_[query].push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, e.what(), line_no, origin);
    }
  }
  for (auto& [query, results] : s.by_query_) {
    std::sort(results.begin(), results.end(),
              [](const SearchResult& a, const SearchResult& b) { return a.rank < b.rank; });
    for (std::size_t r = 0; r < results.size(); ++r) {
      if (results[r].rank != r + 1) {
        throw Error(ErrorCode::MalformedRecord, "ranks for '" + query + "' are not 1..n",
                    std::nullopt, origin);
      }
    }
  }
  return s;
}

CannedSearch CannedSearch::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

std::vector<SearchResult> CannedSearch::search(std::string_view query, std::size_t n) {
  if (n == 0 || n > kMaxResults) {
    throw Error(ErrorCode::InvalidParams, "search needs 1 <= n <= 10");
  }
  if (query.empty()) throw Error(ErrorCode::EmptyInput, "search query is empty");
  const auto q = utf8::ascii_lower(query);
  const std::vector<SearchResult>* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& [key, results] : by_query_) {
    if (key.size() > best_len && q.find(key) != std::string::npos) {
      best = &results;
      best_len = key.size();
    }
  }
  if (!best) return {};
  return {best->begin(), best->begin() + static_cast<std::ptrdiff_t>(std::min(n, best->size()))};
}

Completion EchoCompletion::complete(std::string_view prompt) {
  if (prompt.empty()) throw Error(ErrorCode::EmptyInput, "prompt is empty");
  const auto chars = utf8::length(prompt);
  if (chars > max_prompt_chars_) {
    throw Error(ErrorCode::ContextTooLong, std::to_string(chars) + " characters exceeds " +
                                               std::to_string(max_prompt_chars_));
  }

  std::string section;
  bool question_header_seen = false;
  std::vector<std::string> question;
  std::vector<std::string> translation;
  std::vector<std::string> citations;
  for (const auto line : split_lines(prompt)) {
    if (line.substr(0, 3) == "## ") {
      section = std::string(line.substr(3));
      question_header_seen = false;
      if (section == "Question") question.clear();
      continue;
    }
    if (section == "Question") {
      if (!question_header_seen) {
        question_header_seen = true;  // template's question header line
      } else if (!line.empty()) {
        question.emplace_back(unindent(line));
      }
    } else if (section == "Translation" && !line.empty()) {
      translation.emplace_back(unindent(line));
    } else if (section == "Context") {
      if (auto id = citation_marker(line)) citations.emplace_back(*id);
    }
  }

  auto join = [](const std::vector<std::string>& parts) {
    std::string s;
    for (const auto& p : parts) s += (s.empty() ? "" : " ") + p;
    return s;
  };
  std::string text = "Q: " + join(question);
  if (!translation.empty()) text += "\nA: " + join(translation);
  for (const auto& id : citations) text += "\nuses [" + id + "]";

  Completion c;
  c.provider_id = id();
  c.usage = TokenUsage{chars, utf8::length(text)};
  c.text = std::move(text);
  return c;
}

}  // namespace hakkarag
