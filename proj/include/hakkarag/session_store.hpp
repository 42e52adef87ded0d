#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hakkarag/chat_types.hpp"

namespace hakkarag {

// Append-only session log. Each record is
//
//   u32 LE payload length | u32 LE CRC-32 of payload | payload (UTF-8 JSON)
//
// with payloads {"type":"session","session":{...}} for a new session and
// {"type":"turn","session_id":..,"messages":[user, assistant]} for a turn.
// A whole turn is one record, so a turn is either fully persisted or absent.
//
// On load, a torn final record (short header, length past EOF, or CRC
// mismatch on the last record) is dropped with a warning and the file is
// truncated back to the last good record. A bad record followed by more data
// is unrecoverable: CorruptStore with its byte offset.
class SessionStore {
 public:
  struct LoadResult {
    std::map<std::string, ChatSession> sessions;
    std::size_t records = 0;
    std::size_t valid_bytes = 0;  // length of the good prefix
    std::vector<std::string> warnings;
  };

  // Memory-only store (no file).
  SessionStore();
  // Opens (creating if needed) and replays the log at `path`.
  explicit SessionStore(std::filesystem::path path);
  ~SessionStore();

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  static LoadResult replay(std::string_view bytes);
  static std::string encode_record(std::string_view payload);

  const std::vector<std::string>& load_warnings() const { return warnings_; }

  // Both throw SessionStoreFailure if the record cannot be made durable;
  // in-memory state changes only after a successful write.
  void create(const ChatSession& session);
  void append_turn(const std::string& session_id, const ChatMessage& user,
                   const ChatMessage& assistant);

  std::optional<ChatSession> get(const std::string& session_id) const;
  bool contains(const std::string& session_id) const;
  // Ordered by (created_at, session_id).
  std::vector<SessionSummary> list(std::size_t page, std::size_t page_size) const;
  std::size_t size() const;

 private:
  void write_record(std::string_view payload);

  std::optional<std::filesystem::path> path_;
  int fd_ = -1;
  mutable std::mutex mutex_;
  std::map<std::string, ChatSession> sessions_;
  std::vector<std::string> warnings_;
};

}  // namespace hakkarag
