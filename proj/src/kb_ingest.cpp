#include "hakkarag/kb_ingest.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"

#include "binary_io.hpp"
#include "hakkarag/error.hpp"
#include "hakkarag/kv_config.hpp"
#include "hakkarag/utf8.hpp"

namespace hakkarag {
namespace {

constexpr std::string_view kCorpusMagic = "HKCORPUS";
constexpr std::uint32_t kCorpusVersion = 1;

bool is_hspace(char c) { return c == ' ' || c == '\t' || c == '\f' || c == '\v'; }

struct TsvTable {
  std::vector<std::string> header;
  struct Row {
    std::size_t line = 0;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    out.emplace_back(line.substr(pos, tab == std::string_view::npos ? line.npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

TsvTable read_tsv(std::istream& in, const std::vector<std::string>& required,
                  const std::string& origin) {
  TsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!utf8::is_valid(line)) {
      throw Error(ErrorCode::MalformedRow, "invalid UTF-8", line_no, origin);
    }
    if (!have_header) {
      table.header = split_tabs(line);
      for (auto& h : table.header) h = normalize_text(h);
      for (const auto& col : required) {
        if (!table.column(col)) {
          throw Error(ErrorCode::SchemaMismatch, "header lacks column '" + col + "'", line_no,
                      origin);
        }
      }
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() > table.header.size()) {
      throw Error(ErrorCode::MalformedRow,
                  "row has " + std::to_string(cells.size()) + " columns, header has " +
                      std::to_string(table.header.size()),
                  line_no, origin);
    }
    for (const auto& col : required) {
      if (*table.column(col) >= cells.size()) {
        throw Error(ErrorCode::MalformedRow, "row lacks column '" + col + "'", line_no, origin);
      }
    }
    table.rows.push_back({line_no, std::move(cells)});
  }
  if (!have_header) {
    throw Error(ErrorCode::SchemaMismatch, "missing header row", std::nullopt, origin);
  }
  return table;
}

std::string cell(const TsvTable& t, const TsvTable::Row& row, std::string_view col) {
  const auto idx = t.column(col);
  if (!idx || *idx >= row.cells.size()) return {};
  return normalize_text(row.cells[*idx]);
}

std::string required_cell(const TsvTable& t, const TsvTable::Row& row, std::string_view col,
                          const std::string& origin) {
  auto v = cell(t, row, col);
  if (v.empty()) {
    throw Error(ErrorCode::MalformedRow, "empty '" + std::string(col) + "'", row.line, origin);
  }
  return v;
}

// Columns outside the schema are carried as metadata.
void copy_extra_columns(const TsvTable& t, const TsvTable::Row& row,
                        const std::vector<std::string>& schema, Document& doc) {
  for (std::size_t i = 0; i < t.header.size() && i < row.cells.size(); ++i) {
    if (std::find(schema.begin(), schema.end(), t.header[i]) != schema.end()) continue;
    auto v = normalize_text(row.cells[i]);
    if (!v.empty()) doc.metadata[t.header[i]] = std::move(v);
  }
}

void check_unique(std::set<std::string>& seen, const std::string& id, std::size_t line,
                  const std::string& origin) {
  if (!seen.insert(id).second) {
    throw Error(ErrorCode::DuplicateEntry, "duplicate entry '" + id + "'", line, origin);
  }
}

std::string join_id(SourceKind kind, std::string_view key) {
  return std::string(to_string(kind)) + ":" + std::string(key);
}

}  // namespace

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::encyclopedia: return "encyclopedia";
    case SourceKind::moe_knowledge_base: return "moe_knowledge_base";
    case SourceKind::dictionary: return "dictionary";
    case SourceKind::characteristic_words: return "characteristic_words";
    case SourceKind::gazetteer: return "gazetteer";
  }
  return "unknown";
}

std::optional<SourceKind> source_kind_from_string(std::string_view name) {
  for (auto k : kAllSourceKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool is_atomic(SourceKind kind) {
  return kind == SourceKind::dictionary || kind == SourceKind::characteristic_words;
}

const Document* Corpus::find_document(std::string_view id) const {
  const auto it = std::lower_bound(documents.begin(), documents.end(), id,
                                   [](const Document& d, std::string_view v) { return d.id < v; });
  return it != documents.end() && it->id == id ? &*it : nullptr;
}

const Chunk* Corpus::find_chunk(std::string_view doc_id, std::size_t seq) const {
  const auto it = std::lower_bound(
      chunks.begin(), chunks.end(), std::pair{doc_id, seq},
      [](const Chunk& c, const std::pair<std::string_view, std::size_t>& key) {
        return std::string_view(c.doc_id) < key.first ||
               (c.doc_id == key.first && c.seq < key.second);
      });
  return it != chunks.end() && it->doc_id == doc_id && it->seq == seq ? &*it : nullptr;
}

std::string normalize_text(std::string_view raw) {
  std::vector<std::string> lines;
  std::string line;
  bool pending_space = false;
  auto flush_line = [&] {
    lines.push_back(std::move(line));
    line.clear();
    pending_space = false;
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
      flush_line();
    } else if (is_hspace(c)) {
      pending_space = !line.empty();
    } else {
      if (pending_space) line.push_back(' ');
      pending_space = false;
      line.push_back(c);
    }
  }
  flush_line();

  std::size_t first = 0;
  std::size_t last = lines.size();
  while (first < last && lines[first].empty()) ++first;
  while (last > first && lines[last - 1].empty()) --last;

  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i != first) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::string escape_key_component(std::string_view component) {
  std::string out;
  out.reserve(component.size());
  for (char c : component) {
    switch (c) {
      case '%': out += "%25"; break;
      case '#': out += "%23"; break;
      case '@': out += "%40"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<Document> parse_dictionary(std::istream& in, const std::string& origin) {
  const std::vector<std::string> schema = {"headword", "pronunciation", "definition",
                                           "example"};
  const auto table = read_tsv(in, {"headword", "pronunciation", "definition"}, origin);
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    Document doc;
    doc.source = SourceKind::dictionary;
    const auto headword = required_cell(table, row, "headword", origin);
    const auto pronunciation = cell(table, row, "pronunciation");
    const auto definition = required_cell(table, row, "definition", origin);
    const auto example = cell(table, row, "example");

    auto key = escape_key_component(headword);
    if (!pronunciation.empty()) key += "#" + escape_key_component(pronunciation);
    doc.id = join_id(SourceKind::dictionary, key);
    check_unique(seen, doc.id, row.line, origin);

    doc.title = headword;
    doc.headword = headword;
    std::string body = definition;
    if (!pronunciation.empty()) {
      body += "\npronunciation: " + pronunciation;
      doc.metadata["pronunciation"] = pronunciation;
    }
    if (!example.empty()) body += "\nexample: " + example;
    doc.body = normalize_text(body);
    copy_extra_columns(table, row, schema, doc);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> parse_characteristic_words(std::istream& in, const std::string& origin) {
  const std::vector<std::string> schema = {"word", "description"};
  const auto table = read_tsv(in, schema, origin);
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    Document doc;
    doc.source = SourceKind::characteristic_words;
    const auto word = required_cell(table, row, "word", origin);
    doc.id = join_id(doc.source, escape_key_component(word));
    check_unique(seen, doc.id, row.line, origin);
    doc.title = word;
    doc.headword = word;
    doc.body = required_cell(table, row, "description", origin);
    copy_extra_columns(table, row, schema, doc);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> parse_gazetteer(std::istream& in, const std::string& origin) {
  const std::vector<std::string> schema = {"town", "region", "description"};
  const auto table = read_tsv(in, schema, origin);
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    Document doc;
    doc.source = SourceKind::gazetteer;
    const auto town = required_cell(table, row, "town", origin);
    const auto region = required_cell(table, row, "region", origin);
    doc.id = join_id(doc.source, escape_key_component(town) + "@" + escape_key_component(region));
    check_unique(seen, doc.id, row.line, origin);
    doc.title = town;
    doc.region = region;
    doc.body = required_cell(table, row, "description", origin);
    copy_extra_columns(table, row, schema, doc);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> parse_articles(std::istream& in, SourceKind kind,
                                     const std::string& origin) {
  if (kind != SourceKind::encyclopedia && kind != SourceKind::moe_knowledge_base) {
    throw Error(ErrorCode::InvalidParams,
                "article streams must be encyclopedia or moe_knowledge_base, got " +
                    std::string(to_string(kind)));
  }
  std::vector<Document> docs;
  std::set<std::string> keys;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!utf8::is_valid(line)) {
      throw Error(ErrorCode::MalformedRecord, "invalid UTF-8", line_no, origin);
    }
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, e.what(), line_no, origin);
    }
    if (!rec.is_object()) {
      throw Error(ErrorCode::MalformedRecord, "record is not an object", line_no, origin);
    }
    auto field = [&](const char* name) {
      const auto it = rec.find(name);
      if (it == rec.end() || !it->is_string()) {
        throw Error(ErrorCode::MalformedRecord, std::string("missing string field '") + name + "'",
                    line_no, origin);
      }
      return it->get<std::string>();
    };
    const auto key = field("key");
    Document doc;
    doc.source = kind;
    doc.title = normalize_text(field("title"));
    doc.body = normalize_text(field("body"));
    if (key.empty() || doc.title.empty() || doc.body.empty()) {
      throw Error(ErrorCode::MalformedRecord, "key, title and body must be non-empty", line_no,
                  origin);
    }
    if (!keys.insert(key).second) {
      throw Error(ErrorCode::DuplicateEntry, "duplicate key '" + key + "'", line_no, origin);
    }
    doc.id = join_id(kind, key);
    for (const auto& [name, value] : rec.items()) {
      if (name == "key" || name == "title" || name == "body") continue;
      doc.metadata[name] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_chars,
                                  std::size_t overlap) {
  if (max_chars == 0 || overlap >= max_chars) {
    throw Error(ErrorCode::InvalidParams, "chunking requires 0 <= overlap < max_chars (got max_chars=" +
                                              std::to_string(max_chars) +
                                              ", overlap=" + std::to_string(overlap) + ")");
  }
  if (doc.body.empty()) {
    throw Error(ErrorCode::InvalidParams, "document " + doc.id + " has an empty body");
  }
  const auto cps = utf8::decode(doc.body);
  const std::size_t n = cps.size();
  auto make = [&](std::size_t seq, std::size_t start, std::size_t end) {
    return Chunk{doc.id, seq, utf8::encode(std::u32string_view(cps).substr(start, end - start)),
                 CharSpan{start, end}};
  };

  if (is_atomic(doc.source)) return {make(0, 0, n)};

  auto is_boundary = [&](std::size_t pos) {
    const char32_t c = cps[pos - 1];
    return c == U'。' || c == U'.' || c == U'!' || c == U'?' || c == U'\n';
  };

  std::vector<Chunk> out;
  std::size_t start = 0;
  std::size_t covered = 0;  // end of the previous chunk
  while (true) {
    std::size_t end = 0;
    if (n - start <= max_chars) {
      end = n;
    } else {
      const std::size_t limit = start + max_chars;
      // Each chunk must end past the overlap so the next one starts later.
      const std::size_t floor = std::max(covered, start + overlap);
      for (std::size_t pos = limit; pos > floor; --pos) {
        if (is_boundary(pos)) {
          end = pos;
          break;
        }
      }
      if (end == 0) end = limit;  // one sentence longer than max_chars
    }
    out.push_back(make(out.size(), start, end));
    if (end == n) break;
    covered = end;
    start = end - overlap;
  }
  return out;
}

CorpusManifest CorpusManifest::parse(std::string_view text,
                                     const std::filesystem::path& base_dir,
                                     const std::string& origin) {
  const auto cfg = KvConfig::parse(text, origin, base_dir);
  if (!cfg.section_names().empty()) {
    throw Error(ErrorCode::InvalidConfig, "corpus manifest takes no sections", std::nullopt,
                origin);
  }
  const auto& root = cfg.root();
  std::vector<std::string> known = {"max_chars", "overlap"};
  for (auto k : kAllSourceKinds) known.emplace_back(to_string(k));
  root.require_known(known);

  CorpusManifest m;
  for (auto k : kAllSourceKinds) {
    if (auto p = root.get(std::string(to_string(k))); p && !p->empty()) {
      m.sources[k] = cfg.resolve(*p);
    }
  }
  const auto max_chars = root.get_int("max_chars", 512);
  const auto overlap = root.get_int("overlap", 64);
  if (max_chars <= 0 || overlap < 0 || overlap >= max_chars) {
    throw Error(ErrorCode::InvalidParams, "manifest needs 0 <= overlap < max_chars",
                std::nullopt, origin);
  }
  m.params = ChunkParams{static_cast<std::size_t>(max_chars), static_cast<std::size_t>(overlap)};
  if (m.sources.empty()) {
    throw Error(ErrorCode::EmptyManifest, "manifest lists no source files", std::nullopt, origin);
  }
  return m;
}

CorpusManifest CorpusManifest::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.parent_path(), path.string());
}

Corpus assemble_corpus(std::vector<Document> documents, ChunkParams params) {
  std::sort(documents.begin(), documents.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < documents.size(); ++i) {
    if (documents[i].id == documents[i - 1].id) {
      throw Error(ErrorCode::DuplicateEntry, "duplicate document id '" + documents[i].id + "'");
    }
  }
  Corpus corpus;
  corpus.params = params;
  for (const auto& doc : documents) {
    auto chunks = chunk_document(doc, params.max_chars, params.overlap);
    corpus.chunks.insert(corpus.chunks.end(), std::make_move_iterator(chunks.begin()),
                         std::make_move_iterator(chunks.end()));
    ++corpus.stats.documents_by_source[doc.source];
  }
  corpus.stats.documents = documents.size();
  corpus.stats.chunks = corpus.chunks.size();
  corpus.documents = std::move(documents);
  return corpus;
}

Corpus ingest_corpus(const CorpusManifest& manifest) {
  if (manifest.sources.empty()) {
    throw Error(ErrorCode::EmptyManifest, "manifest lists no source files");
  }
  for (const auto& [kind, path] : manifest.sources) {
    if (!std::filesystem::is_regular_file(path)) {
      throw Error(ErrorCode::FileNotFound, std::string(to_string(kind)) + " source not found",
                  std::nullopt, path.string());
    }
  }

  auto parse_one = [](SourceKind kind, std::filesystem::path path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw Error(ErrorCode::FileNotFound, "cannot open source", std::nullopt, path.string());
    }
    const auto origin = path.string();
    switch (kind) {
      case SourceKind::dictionary: return parse_dictionary(in, origin);
      case SourceKind::characteristic_words: return parse_characteristic_words(in, origin);
      case SourceKind::gazetteer: return parse_gazetteer(in, origin);
      case SourceKind::encyclopedia:
      case SourceKind::moe_knowledge_base: return parse_articles(in, kind, origin);
    }
    return std::vector<Document>{};
  };

  // Sources parse independently; the final order is canonical regardless.
  std::vector<std::future<std::vector<Document>>> pending;
  for (const auto& [kind, path] : manifest.sources) {
    pending.push_back(std::async(std::launch::async, parse_one, kind, path));
  }
  std::vector<Document> all;
  std::optional<Error> first_error;
  for (auto& f : pending) {
    try {
      auto docs = f.get();
      all.insert(all.end(), std::make_move_iterator(docs.begin()),
                 std::make_move_iterator(docs.end()));
    } catch (const Error& e) {
      if (!first_error) first_error = e;
    }
  }
  if (first_error) throw *first_error;
  return assemble_corpus(std::move(all), manifest.params);
}

Corpus ingest_corpus(const std::filesystem::path& manifest_path) {
  return ingest_corpus(CorpusManifest::load(manifest_path));
}

// Layout (little-endian):
//   "HKCORPUS" u32 version u64 max_chars u64 overlap
//   u64 n_docs  { str id, u8 source, str title, str body, u8 flags,
//                 [str headword], [str region], u32 n_meta {str key, str value} }
//   u64 n_chunks { str doc_id, u64 seq, u64 start, u64 end, str text }
// Strings are u32 byte length followed by UTF-8 bytes.
std::string serialize_corpus(const Corpus& corpus) {
  detail::ByteWriter w;
  w.bytes(kCorpusMagic);
  w.u32(kCorpusVersion);
  w.u64(corpus.params.max_chars);
  w.u64(corpus.params.overlap);
  w.u64(corpus.documents.size());
  for (const auto& d : corpus.documents) {
    w.str(d.id);
    w.u8(static_cast<std::uint8_t>(d.source));
    w.str(d.title);
    w.str(d.body);
    w.u8(static_cast<std::uint8_t>((d.headword ? 1 : 0) | (d.region ? 2 : 0)));
    if (d.headword) w.str(*d.headword);
    if (d.region) w.str(*d.region);
    w.u32(static_cast<std::uint32_t>(d.metadata.size()));
    for (const auto& [k, v] : d.metadata) {
      w.str(k);
      w.str(v);
    }
  }
  w.u64(corpus.chunks.size());
  for (const auto& c : corpus.chunks) {
    w.str(c.doc_id);
    w.u64(c.seq);
    w.u64(c.span.start);
    w.u64(c.span.end);
    w.str(c.text);
  }
  return w.take();
}

Corpus deserialize_corpus(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(kCorpusMagic.size()) != kCorpusMagic) r.fail("not a corpus snapshot");
  if (const auto v = r.u32(); v != kCorpusVersion) {
    r.fail("unsupported corpus snapshot version " + std::to_string(v));
  }
  Corpus corpus;
  corpus.params.max_chars = r.u64();
  corpus.params.overlap = r.u64();
  const auto n_docs = r.u64();
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    Document d;
    d.id = r.str();
    const auto src = r.u8();
    if (src >= kAllSourceKinds.size()) r.fail("bad source kind");
    d.source = static_cast<SourceKind>(src);
    d.title = r.str();
    d.body = r.str();
    const auto flags = r.u8();
    if (flags & 1) d.headword = r.str();
    if (flags & 2) d.region = r.str();
    const auto n_meta = r.u32();
    for (std::uint32_t m = 0; m < n_meta; ++m) {
      auto k = r.str();
      d.metadata[std::move(k)] = r.str();
    }
    if (!corpus.documents.empty() && !(corpus.documents.back().id < d.id)) {
      r.fail("documents out of canonical order");
    }
    ++corpus.stats.documents_by_source[d.source];
    corpus.documents.push_back(std::move(d));
  }
  const auto n_chunks = r.u64();
  for (std::uint64_t i = 0; i < n_chunks; ++i) {
    Chunk c;
    c.doc_id = r.str();
    c.seq = r.u64();
    c.span.start = r.u64();
    c.span.end = r.u64();
    c.text = r.str();
    corpus.chunks.push_back(std::move(c));
  }
  if (!r.at_end()) r.fail("trailing bytes");
  corpus.stats.documents = corpus.documents.size();
  corpus.stats.chunks = corpus.chunks.size();
  for (const auto& c : corpus.chunks) {
    if (!corpus.find_document(c.doc_id)) {
      throw Error(ErrorCode::CorruptSnapshot, "chunk references unknown document " + c.doc_id);
    }
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  const auto bytes = serialize_corpus(corpus);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "cannot write corpus snapshot", std::nullopt, path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  try {
    return deserialize_corpus(read_file(path));
  } catch (const Error& e) {
    throw e.with_path(path.string());
  }
}

}  // namespace hakkarag
