#include "hakkarag/prompting.hpp"

#include <array>

#include "hakkarag/error.hpp"
#include "hakkarag/kb_ingest.hpp"
#include "hakkarag/kv_config.hpp"
#include "hakkarag/utf8.hpp"

namespace hakkarag {
namespace {

constexpr std::array<std::string_view, 6> kSections = {
    "role", "skill_cultural", "skill_translation", "limitations", "context_header",
    "question_header"};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// "3. clause" -> "clause"
std::string_view strip_numbering(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i > 0 && i + 1 < line.size() && line[i] == '.' && line[i + 1] == ' ') {
    return trim(line.substr(i + 2));
  }
  return line;
}

// Continuation lines of a block are indented so that no retrieved text can
// start a line that looks like a section heading or citation marker.
void append_block(std::string& out, std::string_view text) {
  std::size_t pos = 0;
  bool first = true;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    if (!first) out += "\n    ";
    out += text.substr(pos, nl - pos);
    first = false;
    pos = nl + 1;
  }
  out += "\n";
}

}  // namespace

void PromptTemplate::validate() const {
  auto need = [](const std::string& v, const char* name) {
    if (trim(v).empty()) {
      throw Error(ErrorCode::InvalidTemplate, std::string("template field '") + name + "' is empty");
    }
  };
  need(role_preamble, "role");
  need(skill_cultural, "skill_cultural");
  need(skill_translation, "skill_translation");
  need(context_header, "context_header");
  need(question_header, "question_header");
  if (limitations.size() != kLimitationCount) {
    throw Error(ErrorCode::InvalidTemplate, "template needs exactly 5 limitations, got " +
                                                std::to_string(limitations.size()));
  }
  for (const auto& l : limitations) need(l, "limitations");
  if (context_header.find('\n') != std::string::npos ||
      question_header.find('\n') != std::string::npos) {
    throw Error(ErrorCode::InvalidTemplate, "headers must be a single line");
  }
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate t;
  std::string current;
  std::array<std::string, kSections.size()> bodies;
  std::array<bool, kSections.size()> seen{};
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t section = kSections.size();
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto raw = text.substr(pos, nl - pos);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
      const auto name = line.substr(1, line.size() - 2);
      section = kSections.size();
      for (std::size_t i = 0; i < kSections.size(); ++i) {
        if (kSections[i] == name) section = i;
      }
      if (section == kSections.size()) {
        throw Error(ErrorCode::InvalidTemplate, "unknown section [" + std::string(name) + "]",
                    line_no);
      }
      if (seen[section]) {
        throw Error(ErrorCode::InvalidTemplate, "duplicate section [" + std::string(name) + "]",
                    line_no);
      }
      seen[section] = true;
      continue;
    }
    if (section == kSections.size()) {
      if (line.empty() || line.front() == '#') continue;
      throw Error(ErrorCode::InvalidTemplate, "text outside any section", line_no);
    }
    if (kSections[section] == "limitations") {
      if (!line.empty()) t.limitations.emplace_back(strip_numbering(line));
      continue;
    }
    auto& body = bodies[section];
    if (!body.empty()) body += "\n";
    body += raw;
  }
  t.role_preamble = std::string(trim(bodies[0]));
  t.skill_cultural = std::string(trim(bodies[1]));
  t.skill_translation = std::string(trim(bodies[2]));
  t.context_header = std::string(trim(bodies[4]));
  t.question_header = std::string(trim(bodies[5]));
  t.validate();
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const Error& e) {
    throw e.with_path(path.string());
  }
}

std::string PromptTemplate::to_text() const {
  std::string out;
  out += "[role]\n" + role_preamble + "\n\n";
  out += "[skill_cultural]\n" + skill_cultural + "\n\n";
  out += "[skill_translation]\n" + skill_translation + "\n\n";
  out += "[limitations]\n";
  for (std::size_t i = 0; i < limitations.size(); ++i) {
    out += std::to_string(i + 1) + ". " + limitations[i] + "\n";
  }
  out += "\n[context_header]\n" + context_header + "\n\n";
  out += "[question_header]\n" + question_header + "\n";
  return out;
}

PromptTemplate default_template() {
  PromptTemplate t;
  t.role_preamble =
      "You will be conversing with an expert in the Hakka language and culture, proficient and "
      "willing to communicate in Traditional Chinese.";
  t.skill_cultural =
      "This expert can provide answers using the \"Knowledge\" resources, including the Hakka "
      "dictionary, the Ministry of Education's Hakka Knowledge Database, the Hakka Cultural "
      "Encyclopedia, Hakka Characteristic Words, and key Hakka towns and townships, answering "
      "questions primarily within the Taiwanese Hakka context.";
  t.skill_translation =
      "When a user inputs Hakka or is preparing to translate Mandarin into Hakka, the system is "
      "called to execute the translation process. The Hakka translation system is utilized to "
      "convert entire Mandarin queries into Hakka.";
  t.limitations = {
      "Answers are provided solely based on the user's questions. No prompts are provided.",
      "Data is returned following the aforementioned format.",
      "Tasks are limited to those related to the Hakka dictionary, the Ministry of Education's "
      "Hakka Knowledge Database, Hakka Cultural Encyclopedia, Hakka Characteristic Words, and key "
      "Hakka towns and townships.",
      "The expert specializes in language translation, particularly from Mandarin to Hakka. If "
      "your question falls outside of this scope, an appropriate response may not be provided.",
      "Responses should be in Hakka characters, not Romanized phonetics. No additional reference "
      "information is to be provided. The expert's translation knowledge is limited to data "
      "provided by \"HakkaTrans\" and \"Knowledge\".",
  };
  t.context_header = "Reference material (cite as [n]):";
  t.question_header = "User question:";
  return t;
}

std::vector<ContextCandidate> candidates_from_hits(std::span<const RetrievalHit> hits,
                                                   const Corpus& corpus) {
  std::vector<ContextCandidate> out;
  out.reserve(hits.size());
  for (const auto& hit : hits) {
    const auto* chunk = corpus.find_chunk(hit.chunk.doc_id, hit.chunk.seq);
    const auto* doc = corpus.find_document(hit.chunk.doc_id);
    if (!chunk || !doc) {
      throw Error(ErrorCode::InconsistentBundle,
                  "hit references unknown chunk " + hit.chunk.doc_id + "#" +
                      std::to_string(hit.chunk.seq));
    }
    out.push_back({std::string(to_string(doc->source)), doc->id, chunk->text});
  }
  return out;
}

PromptBundle assemble(const PromptTemplate& tmpl, const RouteDecision& decision,
                      std::span<const ContextCandidate> candidates,
                      const std::optional<std::string>& translation, std::string_view query,
                      const AssembleOptions& options) {
  tmpl.validate();
  const auto q = normalize_text(query);
  if (q.empty()) throw Error(ErrorCode::InconsistentBundle, "user query is empty");

  if (decision.route == Route::translation) {
    if (!translation || trim(*translation).empty()) {
      throw Error(ErrorCode::InconsistentBundle, "translation route without translation text");
    }
    if (!candidates.empty()) {
      throw Error(ErrorCode::InconsistentBundle, "translation route carries no context");
    }
  } else {
    if (candidates.empty()) {
      throw Error(ErrorCode::InconsistentBundle,
                  std::string(to_string(decision.route)) + " route without context");
    }
    if (translation) {
      throw Error(ErrorCode::InconsistentBundle,
                  std::string(to_string(decision.route)) + " route with translation text");
    }
  }

  PromptBundle bundle;
  bundle.tmpl = tmpl;
  bundle.route = decision.route;
  bundle.translation_result = translation;
  bundle.user_query = q;
  bundle.reply_in_hakka = options.reply_in_hakka;

  std::size_t used = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto len = utf8::length(candidates[i].text);
    if (i > 0 && used + len > options.context_budget) {
      bundle.dropped_context = candidates.size() - i;
      break;
    }
    used += len;
    bundle.retrieved.push_back({std::to_string(i + 1), candidates[i].source_kind,
                                candidates[i].ref, candidates[i].text});
  }
  return bundle;
}

std::string render(const PromptBundle& b) {
  std::string out;
  out += "## Role\n" + b.tmpl.role_preamble + "\n\n";
  if (b.route == Route::translation) {
    out += "## Skill 2\n" + b.tmpl.skill_translation + "\n\n";
  } else {
    out += "## Skill 1\n" + b.tmpl.skill_cultural + "\n\n";
  }
  out += "## Limitations\n";
  for (std::size_t i = 0; i < b.tmpl.limitations.size(); ++i) {
    out += std::to_string(i + 1) + ". " + b.tmpl.limitations[i] + "\n";
  }
  if (b.reply_in_hakka) {
    out += "\n## Reply Language\nReply in Hakka, written in Hakka characters.\n";
  }
  if (!b.retrieved.empty()) {
    out += "\n## Context\n" + b.tmpl.context_header + "\n";
    for (const auto& e : b.retrieved) {
      out += "[" + e.citation_id + "] (" + e.source_kind + ") ";
      append_block(out, e.text);
    }
  }
  if (b.translation_result) {
    out += "\n## Translation\n";
    append_block(out, *b.translation_result);
  }
  out += "\n## Question\n" + b.tmpl.question_header + "\n";
  append_block(out, b.user_query);
  return out;
}

}  // namespace hakkarag
