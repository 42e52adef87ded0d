#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hakkarag {

// Key-value config files shared by the corpus manifest and the service
// config:
//
//   # comment
//   key = value
//   [section.name]
//   key = value
//
// Keys before the first section header belong to the root section "".
// Values are trimmed; there is no quoting or escaping.
class KvSection {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  KvSection() = default;
  KvSection(std::string name, std::string origin);

  const std::string& name() const { return name_; }
  bool empty() const { return entries_.empty(); }
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  void set(const std::string& key, std::string value, std::size_t line);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws InvalidConfig naming the first key not in `known`.
  void require_known(const std::vector<std::string>& known) const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;

  std::string name_;
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

class KvConfig {
 public:
  static KvConfig parse(std::string_view text, std::string origin = {},
                        std::filesystem::path base_dir = {});
  static KvConfig load(const std::filesystem::path& path);

  const KvSection& root() const;
  const KvSection* section(const std::string& name) const;
  std::vector<std::string> section_names() const;

  // Directory relative paths in the file resolve against.
  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::filesystem::path resolve(const std::string& path) const;

 private:
  std::map<std::string, KvSection> sections_;
  std::filesystem::path base_dir_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace hakkarag
