#include "hakkarag/session_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <tuple>

#include <zlib.h>

#include "hakkarag/error.hpp"

namespace hakkarag {
namespace {

using nlohmann::json;

constexpr std::size_t kHeaderBytes = 8;

std::uint32_t crc32_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

std::string errno_text() { return std::strerror(errno); }

void apply_record(std::map<std::string, ChatSession>& sessions, const json& rec,
                  std::size_t offset) {
  const auto type = rec.at("type").get<std::string>();
  if (type == "session") {
    const auto& s = rec.at("session");
    ChatSession session;
    session.session_id = s.at("session_id").get<std::string>();
    session.created_at_ms = s.at("created_at_ms").get<std::int64_t>();
    session.hakka_reply = s.value("hakka_reply", false);
    if (!sessions.emplace(session.session_id, session).second) {
      throw Error(ErrorCode::CorruptStore, "session " + session.session_id + " created twice",
                  offset);
    }
  } else if (type == "turn") {
    const auto id = rec.at("session_id").get<std::string>();
    const auto it = sessions.find(id);
    if (it == sessions.end()) {
      throw Error(ErrorCode::CorruptStore, "turn for unknown session " + id, offset);
    }
    for (const auto& m : rec.at("messages")) it->second.messages.push_back(message_from_json(m));
  } else {
    throw Error(ErrorCode::CorruptStore, "unknown record type " + type, offset);
  }
}

}  // namespace

std::string SessionStore::encode_record(std::string_view payload) {
  std::string out;
  out.reserve(kHeaderBytes + payload.size());
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  put_u32(out, crc32_of(payload));
  out.append(payload);
  return out;
}

SessionStore::LoadResult SessionStore::replay(std::string_view bytes) {
  LoadResult result;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto torn = [&](const std::string& why) {
      result.warnings.push_back("dropping torn final record at offset " + std::to_string(pos) +
                                " (" + why + ", " + std::to_string(bytes.size() - pos) +
                                " bytes)");
    };
    if (bytes.size() - pos < kHeaderBytes) {
      torn("short header");
      break;
    }
    const std::size_t len = get_u32(bytes, pos);
    const std::uint32_t crc = get_u32(bytes, pos + 4);
    if (len > bytes.size() - pos - kHeaderBytes) {
      torn("length runs past end of file");
      break;
    }
    const auto payload = bytes.substr(pos + kHeaderBytes, len);
    const auto end = pos + kHeaderBytes + len;
    if (crc32_of(payload) != crc) {
      if (end == bytes.size()) {
        torn("checksum mismatch");
        break;
      }
      throw Error(ErrorCode::CorruptStore, "checksum mismatch", pos);
    }
    try {
      apply_record(result.sessions, json::parse(payload), pos);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorruptStore, std::string("bad record: ") + e.what(), pos);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CorruptStore) throw;
      throw Error(ErrorCode::CorruptStore, e.what(), pos);
    }
    ++result.records;
    pos = end;
    result.valid_bytes = pos;
  }
  return result;
}

SessionStore::SessionStore() = default;

SessionStore::SessionStore(std::filesystem::path path) : path_(std::move(path)) {
  std::string bytes;
  if (std::filesystem::exists(*path_)) {
    std::ifstream in(*path_, std::ios::binary);
    if (!in) {
      throw Error(ErrorCode::SessionStoreFailure, "cannot read store", std::nullopt,
                  path_->string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    bytes = ss.str();
  }
  LoadResult loaded;
  try {
    loaded = replay(bytes);
  } catch (const Error& e) {
    throw e.with_path(path_->string());
  }
  sessions_ = std::move(loaded.sessions);
  warnings_ = std::move(loaded.warnings);
  for (const auto& w : warnings_) std::cerr << "warning: " << path_->string() << ": " << w << '\n';

  fd_ = ::open(path_->c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::SessionStoreFailure, "cannot open store: " + errno_text(),
                std::nullopt, path_->string());
  }
  if (loaded.valid_bytes < bytes.size()) {
    if (::ftruncate(fd_, static_cast<off_t>(loaded.valid_bytes)) != 0 || ::fsync(fd_) != 0) {
      const auto why = errno_text();
      ::close(fd_);
      throw Error(ErrorCode::SessionStoreFailure, "cannot truncate torn tail: " + why,
                  std::nullopt, path_->string());
    }
  }
  if (::lseek(fd_, 0, SEEK_END) < 0) {
    const auto why = errno_text();
    ::close(fd_);
    throw Error(ErrorCode::SessionStoreFailure, "cannot seek: " + why, std::nullopt,
                path_->string());
  }
}

SessionStore::~SessionStore() {
  if (fd_ >= 0) ::close(fd_);
}

// Caller holds mutex_.
void SessionStore::write_record(std::string_view payload) {
  if (fd_ < 0) return;
  const auto record = encode_record(payload);
  const off_t start = ::lseek(fd_, 0, SEEK_END);
  std::size_t written = 0;
  while (written < record.size()) {
    const auto n = ::write(fd_, record.data() + written, record.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const auto why = errno_text();
      // Leave no partial record behind for the next append to land after.
      if (start >= 0 && ::ftruncate(fd_, start) == 0) ::lseek(fd_, start, SEEK_SET);
      throw Error(ErrorCode::SessionStoreFailure, "write failed: " + why, std::nullopt,
                  path_->string());
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) {
    throw Error(ErrorCode::SessionStoreFailure, "fsync failed: " + errno_text(), std::nullopt,
                path_->string());
  }
}

void SessionStore::create(const ChatSession& session) {
  std::lock_guard lock(mutex_);
  if (sessions_.count(session.session_id)) {
    throw Error(ErrorCode::SessionStoreFailure, "duplicate session id " + session.session_id);
  }
  const json rec = {{"type", "session"},
                    {"session",
                     {{"session_id", session.session_id},
                      {"created_at_ms", session.created_at_ms},
                      {"hakka_reply", session.hakka_reply}}}};
  write_record(rec.dump());
  ChatSession fresh = session;
  fresh.messages.clear();
  sessions_.emplace(fresh.session_id, std::move(fresh));
}

void SessionStore::append_turn(const std::string& session_id, const ChatMessage& user,
                               const ChatMessage& assistant) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, session_id);
  const json rec = {{"type", "turn"},
                    {"session_id", session_id},
                    {"messages", json::array({to_json(user), to_json(assistant)})}};
  write_record(rec.dump());
  it->second.messages.push_back(user);
  it->second.messages.push_back(assistant);
}

std::optional<ChatSession> SessionStore::get(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

bool SessionStore::contains(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return sessions_.count(session_id) != 0;
}

std::vector<SessionSummary> SessionStore::list(std::size_t page, std::size_t page_size) const {
  std::vector<SessionSummary> all;
  {
    std::lock_guard lock(mutex_);
    all.reserve(sessions_.size());
    for (const auto& [id, s] : sessions_) all.push_back({id, s.created_at_ms, s.messages.size()});
  }
  std::sort(all.begin(), all.end(), [](const SessionSummary& a, const SessionSummary& b) {
    return std::tie(a.created_at_ms, a.session_id) < std::tie(b.created_at_ms, b.session_id);
  });
  if (page_size == 0) throw Error(ErrorCode::InvalidParams, "page size must be positive");
  const auto begin = std::min(all.size(), page * page_size);
  const auto end = std::min(all.size(), begin + page_size);
  return {all.begin() + static_cast<std::ptrdiff_t>(begin),
          all.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace hakkarag
