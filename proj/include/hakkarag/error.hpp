#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hakkarag {

enum class ErrorCode {
  // ingestion
  MalformedRow,
  MalformedRecord,
  DuplicateEntry,
  SchemaMismatch,
  EmptyManifest,
  FileNotFound,
  // configuration / parameters
  InvalidParams,
  InvalidConfig,
  InvalidTemplate,
  CorruptSnapshot,
  // embedding and index
  EmptyText,
  ZeroVector,
  DimensionMismatch,
  EmptyCorpus,
  EmbedderMismatch,
  // prompting
  InconsistentBundle,
  // providers
  ProviderUnavailable,
  UnsupportedDirection,
  UntranslatableInput,
  QuotaExceeded,
  ContextTooLong,
  // chat service
  EmptyInput,
  UnknownSession,
  SessionStoreFailure,
  CorruptStore,
  // evaluation
  InvalidItem,
  FixtureMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as this exception. `location` is a
// 1-based line number for text inputs or a byte offset for binary ones.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<std::size_t> location = std::nullopt,
        std::string path = {});

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::size_t>& location() const noexcept { return location_; }
  const std::string& path() const noexcept { return path_; }
  const std::string& detail() const noexcept { return detail_; }

  // Same error, with a context prefix ("chunk X: ...") or a file path attached.
  Error with_context(std::string_view context) const;
  Error with_path(std::string path) const;

 private:
  static std::string compose(ErrorCode code, const std::string& detail,
                             const std::optional<std::size_t>& location,
                             const std::string& path);

  ErrorCode code_;
  std::string detail_;
  std::optional<std::size_t> location_;
  std::string path_;
};

}  // namespace hakkarag
