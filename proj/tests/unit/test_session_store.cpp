#include <filesystem>

#include "doctest.h"

#include "fixtures.hpp"
#include "hakkarag/session_store.hpp"

namespace hk = hakkarag;
namespace fs = std::filesystem;

namespace {

hk::ChatMessage user_msg(std::size_t turn, std::string text) {
  return {turn, hk::Author::user, std::move(text), std::nullopt};
}

hk::ChatMessage assistant_msg(std::size_t turn, std::string text) {
  hk::AnswerEnvelope e;
  e.answer = text;
  e.route = hk::Route::cultural_kb;
  e.citations = {{"1", "encyclopedia", "encyclopedia:lei-cha", "擂茶是客家待客的傳統飲食。"}};
  e.latency_ms = 12;
  return {turn, hk::Author::assistant, std::move(text), e};
}

hk::ChatSession session(std::string id, std::int64_t at) { return {std::move(id), at, false, {}}; }

// One session with three turns; returns the byte size after each record.
std::vector<std::uintmax_t> write_three_turns(const fs::path& p) {
  std::vector<std::uintmax_t> sizes;
  hk::SessionStore store(p);
  store.create(session("s1", 1000));
  sizes.push_back(fs::file_size(p));
  for (std::size_t t = 0; t < 3; ++t) {
    store.append_turn("s1", user_msg(2 * t, "問題 " + std::to_string(t)),
                      assistant_msg(2 * t + 1, "回答 [1] " + std::to_string(t)));
    sizes.push_back(fs::file_size(p));
  }
  return sizes;
}

}  // namespace

TEST_SUITE("session_store") {
  TEST_CASE("three turns round-trip through the file") {
    fixtures::TempDir tmp;
    const auto p = tmp / "sessions.log";
    write_three_turns(p);
    hk::SessionStore original_view(p);
    const auto s = original_view.get("s1");
    REQUIRE(s.has_value());
    CHECK(s->messages.size() == 6);
    CHECK(s->messages[5] == assistant_msg(5, "回答 [1] 2"));
    CHECK(original_view.load_warnings().empty());

    hk::SessionStore again(p);
    CHECK(again.get("s1") == s);
  }

  TEST_CASE("torn final record: prefix recovered, warning emitted, file truncated") {
    fixtures::TempDir tmp;
    const auto p = tmp / "sessions.log";
    const auto sizes = write_three_turns(p);
    // Cut the last turn record in half.
    fs::resize_file(p, sizes[2] + (sizes[3] - sizes[2]) / 2);

    hk::SessionStore store(p);
    REQUIRE(store.get("s1").has_value());
    CHECK(store.get("s1")->messages.size() == 4);  // 2 turns
    REQUIRE(store.load_warnings().size() == 1);
    CHECK(store.load_warnings()[0].find("torn") != std::string::npos);
    CHECK(fs::file_size(p) == sizes[2]);

    // Appending after recovery yields a clean log.
    store.append_turn("s1", user_msg(4, "再問"), assistant_msg(5, "再答"));
    hk::SessionStore reread(p);
    CHECK(reread.get("s1")->messages.size() == 6);
    CHECK(reread.load_warnings().empty());
  }

  TEST_CASE("torn header and torn checksum at the tail are both dropped") {
    fixtures::TempDir tmp;
    const auto p = tmp / "sessions.log";
    const auto sizes = write_three_turns(p);

    fs::resize_file(p, sizes[3] + 3);  // stray bytes: short header
    CHECK(hk::SessionStore(p).get("s1")->messages.size() == 6);

    write_three_turns(tmp / "b.log");
    auto bytes = fixtures::slurp(tmp / "b.log");
    bytes[bytes.size() - 2] ^= 0x5A;  // last record payload, full length
    fixtures::spit(tmp / "b.log", bytes);
    hk::SessionStore store(tmp / "b.log");
    CHECK(store.get("s1")->messages.size() == 4);
    CHECK(store.load_warnings().size() == 1);
  }

  TEST_CASE("mid-file corruption is CorruptStore with the offset") {
    fixtures::TempDir tmp;
    const auto p = tmp / "sessions.log";
    const auto sizes = write_three_turns(p);
    auto bytes = fixtures::slurp(p);
    bytes[sizes[1] + 10] ^= 0x01;  // inside the third record (second turn)
    fixtures::spit(p, bytes);
    try {
      hk::SessionStore store(p);
      FAIL("expected CorruptStore");
    } catch (const hk::Error& e) {
      CHECK(e.code() == hk::ErrorCode::CorruptStore);
      CHECK(e.location() == std::optional<std::size_t>(sizes[1]));
    }
  }

  TEST_CASE("empty and missing store files hold zero sessions") {
    fixtures::TempDir tmp;
    fixtures::spit(tmp / "empty.log", "");
    CHECK(hk::SessionStore(tmp / "empty.log").size() == 0);
    hk::SessionStore created(tmp / "new.log");
    CHECK(created.size() == 0);
    CHECK(fs::exists(tmp / "new.log"));
  }

  TEST_CASE("record encoding") {
    const auto rec = hk::SessionStore::encode_record("{}");
    REQUIRE(rec.size() == 10);
    CHECK(rec[0] == 2);
    CHECK(rec.substr(8) == "{}");
    const auto replayed = hk::SessionStore::replay(
        hk::SessionStore::encode_record(R"({"type":"session","session":{"session_id":"a","created_at_ms":5}})"));
    CHECK(replayed.records == 1);
    CHECK(replayed.sessions.at("a").created_at_ms == 5);
    CHECK_THROWS_AS(hk::SessionStore::replay(hk::SessionStore::encode_record(R"({"type":"turn","session_id":"zz","messages":[]})") +
                                             hk::SessionStore::encode_record("{}")),
                    hk::Error);
  }

  TEST_CASE("listing pages by creation time") {
    hk::SessionStore store;
    store.create(session("b", 2));
    store.create(session("a", 2));
    store.create(session("c", 1));
    const auto first = store.list(0, 2);
    REQUIRE(first.size() == 2);
    CHECK(first[0].session_id == "c");
    CHECK(first[1].session_id == "a");
    CHECK(store.list(1, 2).size() == 1);
    CHECK(store.list(5, 2).empty());
    CHECK_THROWS_AS(store.create(session("a", 3)), hk::Error);
    CHECK_THROWS_AS(store.append_turn("nope", user_msg(0, "x"), assistant_msg(1, "y")), hk::Error);
  }

  TEST_CASE("unwritable store fails loudly") {
    CHECK_THROWS_AS(hk::SessionStore("/proc/hakkarag-no-such-dir/s.log"), hk::Error);
  }
}
