#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"

#include "fixtures.hpp"
#include "hakkarag/kb_ingest.hpp"
#include "hakkarag/utf8.hpp"

namespace hk = hakkarag;
namespace utf8 = hakkarag::utf8;
using fixtures::data;

namespace {

std::vector<hk::Document> dict(const std::string& tsv) {
  std::istringstream in(tsv);
  return hk::parse_dictionary(in, "dict.tsv");
}

hk::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const hk::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return hk::ErrorCode::Io;
}

hk::Document article(std::string body) {
  hk::Document d;
  d.id = "encyclopedia:t";
  d.source = hk::SourceKind::encyclopedia;
  d.title = "t";
  d.body = std::move(body);
  return d;
}

// Rebuilds the body from chunk texts using their spans.
std::string stitch(const std::vector<hk::Chunk>& chunks) {
  std::string out;
  std::size_t covered = 0;
  for (const auto& c : chunks) {
    out += utf8::substr(c.text, covered - c.span.start, c.span.size());
    covered = c.span.end;
  }
  return out;
}

}  // namespace

TEST_SUITE("kb_ingest") {
  TEST_CASE("normalize_text") {
    CHECK(hk::normalize_text("a  b\r\nc ") == "a b\nc");
    CHECK(hk::normalize_text("客家") == "客家");
    CHECK(hk::normalize_text("") == "");
    CHECK(hk::normalize_text("\n\n  x\t\ty  \r\n\n") == "x y");
    CHECK(hk::normalize_text("a\rb") == "a\nb");
  }

  TEST_CASE("dictionary row maps field by field") {
    const auto docs = dict("headword\tpronunciation\tdefinition\texample\n粄\tban3\trice cake\t做粄\n");
    REQUIRE(docs.size() == 1);
    const auto& d = docs[0];
    CHECK(d.id == "dictionary:粄#ban3");
    CHECK(d.source == hk::SourceKind::dictionary);
    CHECK(d.title == "粄");
    CHECK(d.headword == std::optional<std::string>("粄"));
    CHECK_FALSE(d.region.has_value());
    CHECK(d.body == "rice cake\npronunciation: ban3\nexample: 做粄");
    CHECK(d.metadata.at("pronunciation") == "ban3");
  }

  TEST_CASE("dictionary edge cases") {
    CHECK(dict("headword\tpronunciation\tdefinition\texample\n").empty());
    CHECK(code_of([] { dict("headword\tpronunciation\tdefinition\texample\n粄\tban3\n"); }) ==
          hk::ErrorCode::MalformedRow);
    CHECK(code_of([] {
            dict("headword\tpronunciation\tdefinition\texample\n粄\tban3\ta\t\n粄\tban3\tb\t\n");
          }) == hk::ErrorCode::DuplicateEntry);
    // Same headword, different pronunciation: distinct ids.
    const auto two = dict("headword\tpronunciation\tdefinition\texample\n粄\tban3\ta\t\n粄\tban2\tb\t\n");
    CHECK(two[0].id != two[1].id);
    // Empty example: no example line.
    CHECK(dict("headword\tpronunciation\tdefinition\texample\n粄\tban3\ta\t\n")[0].body ==
          "a\npronunciation: ban3");
    CHECK(code_of([] { dict("headword\tdefinition\n粄\ta\n"); }) == hk::ErrorCode::SchemaMismatch);
  }

  TEST_CASE("id components escape the separators") {
    const auto docs = dict("headword\tpronunciation\tdefinition\texample\na#b\tx@y%\td\t\n");
    CHECK(docs[0].id == "dictionary:a%23b#x%40y%25");
    CHECK(hk::escape_key_component("plain") == "plain");
  }

  TEST_CASE("gazetteer rows and header errors") {
    std::istringstream in("town\tregion\tdescription\n北埔\t新竹\tknown for tea\n");
    const auto docs = hk::parse_gazetteer(in);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].region == std::optional<std::string>("新竹"));
    CHECK(docs[0].id == "gazetteer:北埔@新竹");
    CHECK_FALSE(docs[0].headword.has_value());

    std::istringstream header_only("town\tregion\tdescription\n");
    CHECK(hk::parse_gazetteer(header_only).empty());
    std::istringstream no_region("town\tdescription\n北埔\tx\n");
    CHECK(code_of([&] { hk::parse_gazetteer(no_region); }) == hk::ErrorCode::SchemaMismatch);
  }

  TEST_CASE("characteristic words keep the headword") {
    std::istringstream in("word\tdescription\tcategory\n硬頸\t堅毅不屈\ttrait\n");
    const auto docs = hk::parse_characteristic_words(in);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].id == "characteristic_words:硬頸");
    CHECK(docs[0].headword == std::optional<std::string>("硬頸"));
    CHECK(docs[0].metadata.at("category") == "trait");
  }

  TEST_CASE("articles") {
    std::istringstream one(R"({"key":"k1","title":"擂茶","body":"a  b"})" "\n");
    const auto docs = hk::parse_articles(one, hk::SourceKind::encyclopedia);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].id == "encyclopedia:k1");
    CHECK(docs[0].title == "擂茶");
    CHECK(docs[0].body == "a b");

    std::istringstream empty("");
    CHECK(hk::parse_articles(empty, hk::SourceKind::moe_knowledge_base).empty());

    std::istringstream no_body(R"({"key":"k1","title":"t"})" "\n");
    try {
      hk::parse_articles(no_body, hk::SourceKind::encyclopedia);
      FAIL("expected MalformedRecord");
    } catch (const hk::Error& e) {
      CHECK(e.code() == hk::ErrorCode::MalformedRecord);
      CHECK(e.location() == std::optional<std::size_t>(1));
    }

    std::istringstream dup(R"({"key":"k","title":"a","body":"x"})" "\n"
                           R"({"key":"k","title":"b","body":"y"})" "\n");
    CHECK(code_of([&] { hk::parse_articles(dup, hk::SourceKind::encyclopedia); }) ==
          hk::ErrorCode::DuplicateEntry);

    std::istringstream bad_utf8("{\"key\":\"k\",\"title\":\"\xC3\",\"body\":\"x\"}\n");
    CHECK(code_of([&] { hk::parse_articles(bad_utf8, hk::SourceKind::encyclopedia); }) ==
          hk::ErrorCode::MalformedRecord);

    std::istringstream wrong_kind(R"({"key":"k","title":"a","body":"x"})" "\n");
    CHECK(code_of([&] { hk::parse_articles(wrong_kind, hk::SourceKind::gazetteer); }) ==
          hk::ErrorCode::InvalidParams);
  }

  TEST_CASE("chunking examples") {
    const auto ten = hk::chunk_document(article("0123456789"), 512, 64);
    REQUIRE(ten.size() == 1);
    CHECK(ten[0].span == hk::CharSpan{0, 10});

    const auto ab = hk::chunk_document(article("A。B。"), 3, 0);
    REQUIRE(ab.size() == 2);
    CHECK(ab[0].text == "A。");
    CHECK(ab[1].text == "B。");
    CHECK(ab[1].seq == 1);

    hk::Document entry = article(std::string(2000, 'x'));
    entry.id = "dictionary:x";
    entry.source = hk::SourceKind::dictionary;
    entry.headword = "x";
    CHECK(hk::chunk_document(entry, 512, 64).size() == 1);

    CHECK_THROWS_AS(hk::chunk_document(article("abc"), 4, 4), hk::Error);
    CHECK_THROWS_AS(hk::chunk_document(article("abc"), 0, 0), hk::Error);
  }

  TEST_CASE("long sentences fall back to a hard split") {
    const auto chunks = hk::chunk_document(article(std::string(25, 'a')), 10, 2);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].span == hk::CharSpan{0, 10});
    CHECK(chunks[1].span == hk::CharSpan{8, 18});
    CHECK(chunks[2].span == hk::CharSpan{16, 25});
  }

  TEST_CASE("reconstruction and overlap hold on random bodies") {
    std::mt19937 rng(20261015);
    const std::vector<std::string> alphabet = {"客", "家", "。", "a", ".", "!", "?", "\n", "茶", "𠊎"};
    for (int trial = 0; trial < 300; ++trial) {
      std::string body;
      const int len = 1 + static_cast<int>(rng() % 120);
      for (int i = 0; i < len; ++i) body += alphabet[rng() % alphabet.size()];
      body = hk::normalize_text(body);
      if (body.empty()) continue;
      const std::size_t max_chars = 2 + rng() % 30;
      const std::size_t overlap = rng() % max_chars;
      const auto chunks = hk::chunk_document(article(body), max_chars, overlap);
      CAPTURE(body);
      CAPTURE(max_chars);
      CAPTURE(overlap);
      REQUIRE(!chunks.empty());
      CHECK(stitch(chunks) == body);
      CHECK(chunks.front().span.start == 0);
      CHECK(chunks.back().span.end == utf8::length(body));
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        CHECK(chunks[i].seq == i);
        CHECK(chunks[i].span.size() <= max_chars);
        CHECK(chunks[i].span.size() > 0);
        CHECK(utf8::length(chunks[i].text) == chunks[i].span.size());
        if (i + 1 < chunks.size()) {
          CHECK(chunks[i].span.end - chunks[i + 1].span.start == overlap);
        }
      }
    }
  }

  TEST_CASE("fixture manifest ingests with the expected per-source counts") {
    const auto corpus = hk::ingest_corpus(data("manifest.conf"));
    const std::map<hk::SourceKind, std::size_t> expected = {
        {hk::SourceKind::dictionary, 3},           {hk::SourceKind::encyclopedia, 2},
        {hk::SourceKind::gazetteer, 2},            {hk::SourceKind::characteristic_words, 4},
        {hk::SourceKind::moe_knowledge_base, 1}};
    CHECK(corpus.stats.documents_by_source == expected);
    CHECK(corpus.stats.documents == 12);
    CHECK(corpus.stats.chunks == 12);
    CHECK(std::is_sorted(corpus.documents.begin(), corpus.documents.end(),
                         [](const auto& a, const auto& b) { return a.id < b.id; }));
    std::set<std::string> ids;
    for (const auto& d : corpus.documents) ids.insert(d.id);
    CHECK(ids.size() == corpus.documents.size());
    // Extra JSONL fields survive as metadata.
    CHECK(corpus.find_document("moe_knowledge_base:bayin")->metadata.count("grade") == 1);
  }

  TEST_CASE("manifest errors") {
    fixtures::TempDir tmp;
    fixtures::spit(tmp / "empty.conf", "# nothing\nmax_chars = 512\n");
    CHECK(code_of([&] { hk::ingest_corpus(tmp / "empty.conf"); }) == hk::ErrorCode::EmptyManifest);

    fixtures::spit(tmp / "missing.conf", "dictionary = nope.tsv\n");
    try {
      hk::ingest_corpus(tmp / "missing.conf");
      FAIL("expected FileNotFound");
    } catch (const hk::Error& e) {
      CHECK(e.code() == hk::ErrorCode::FileNotFound);
      CHECK(std::string(e.what()).find("nope.tsv") != std::string::npos);
    }

    fixtures::spit(tmp / "unknown.conf", "dictonary = a.tsv\n");
    CHECK(code_of([&] { hk::ingest_corpus(tmp / "unknown.conf"); }) == hk::ErrorCode::InvalidConfig);
  }

  TEST_CASE("parser errors carry the file path and ingestion stays atomic") {
    fixtures::TempDir tmp;
    fixtures::spit(tmp / "good.jsonl", R"({"key":"a","title":"t","body":"b"})" "\n");
    fixtures::spit(tmp / "bad.tsv", "headword\tpronunciation\tdefinition\texample\nx\n");
    fixtures::spit(tmp / "m.conf", "encyclopedia = good.jsonl\ndictionary = bad.tsv\n");
    try {
      hk::ingest_corpus(tmp / "m.conf");
      FAIL("expected MalformedRow");
    } catch (const hk::Error& e) {
      CHECK(e.code() == hk::ErrorCode::MalformedRow);
      CHECK(e.path().find("bad.tsv") != std::string::npos);
      CHECK(e.location() == std::optional<std::size_t>(2));
    }
  }

  TEST_CASE("near-duplicate keys stay distinct across sources") {
    fixtures::TempDir tmp;
    fixtures::spit(tmp / "d.tsv", "headword\tpronunciation\tdefinition\texample\n擂茶\tlui5\ta\t\n擂茶\t\tb\t\n");
    fixtures::spit(tmp / "c.tsv", "word\tdescription\n擂茶\tc\n");
    fixtures::spit(tmp / "g.tsv", "town\tregion\tdescription\n擂茶\t新竹\td\n擂茶\t苗栗\te\n");
    fixtures::spit(tmp / "m.conf", "dictionary = d.tsv\ncharacteristic_words = c.tsv\ngazetteer = g.tsv\n");
    const auto corpus = hk::ingest_corpus(tmp / "m.conf");
    std::set<std::string> ids;
    for (const auto& d : corpus.documents) ids.insert(d.id);
    CHECK(ids.size() == 5);
  }

  TEST_CASE("corpus snapshot round-trips and is deterministic") {
    const auto a = hk::ingest_corpus(data("manifest.conf"));
    const auto b = hk::ingest_corpus(data("manifest.conf"));
    const auto bytes = hk::serialize_corpus(a);
    CHECK(bytes == hk::serialize_corpus(b));
    CHECK(bytes.substr(0, 8) == "HKCORPUS");
    CHECK(hk::deserialize_corpus(bytes) == a);
  }

  TEST_CASE("corrupt corpus snapshots are rejected with an offset") {
    const auto bytes = hk::serialize_corpus(hk::ingest_corpus(data("manifest.conf")));
    CHECK(code_of([&] { hk::deserialize_corpus(bytes.substr(0, bytes.size() - 3)); }) ==
          hk::ErrorCode::CorruptSnapshot);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(code_of([&] { hk::deserialize_corpus(bad_magic); }) == hk::ErrorCode::CorruptSnapshot);
    auto bad_version = bytes;
    bad_version[8] = 9;
    CHECK(code_of([&] { hk::deserialize_corpus(bad_version); }) == hk::ErrorCode::CorruptSnapshot);
    CHECK(code_of([&] { hk::deserialize_corpus(bytes + "x"); }) == hk::ErrorCode::CorruptSnapshot);
  }
}
