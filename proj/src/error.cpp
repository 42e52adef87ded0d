#include "hakkarag/error.hpp"

namespace hakkarag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateEntry: return "DuplicateEntry";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmbedderMismatch: return "EmbedderMismatch";
    case ErrorCode::InconsistentBundle: return "InconsistentBundle";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::UnsupportedDirection: return "UnsupportedDirection";
    case ErrorCode::UntranslatableInput: return "UntranslatableInput";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::ContextTooLong: return "ContextTooLong";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SessionStoreFailure: return "SessionStoreFailure";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::InvalidItem: return "InvalidItem";
    case ErrorCode::FixtureMismatch: return "FixtureMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string message,
             std::optional<std::size_t> location, std::string path)
    : std::runtime_error(compose(code, message, location, path)),
      code_(code),
      detail_(std::move(message)),
      location_(location),
      path_(std::move(path)) {}

Error Error::with_context(std::string_view context) const {
  return Error(code_, std::string(context) + ": " + detail_, location_, path_);
}

Error Error::with_path(std::string path) const {
  return Error(code_, detail_, location_, std::move(path));
}

std::string Error::compose(ErrorCode code, const std::string& detail,
                           const std::optional<std::size_t>& location,
                           const std::string& path) {
  std::string out(to_string(code));
  if (!path.empty()) {
    out += " [" + path;
    if (location) out += ":" + std::to_string(*location);
    out += "]";
  } else if (location) {
    out += " [at " + std::to_string(*location) + "]";
  }
  if (!detail.empty()) out += ": " + detail;
  return out;
}

}  // namespace hakkarag
