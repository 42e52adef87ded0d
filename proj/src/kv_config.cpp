#include "hakkarag/kv_config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hakkarag/error.hpp"

namespace hakkarag {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::FileNotFound, "cannot open file", std::nullopt, path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

KvSection::KvSection(std::string name, std::string origin)
    : name_(std::move(name)), origin_(std::move(origin)) {}

void KvSection::set(const std::string& key, std::string value, std::size_t line) {
  entries_[key] = Entry{std::move(value), line};
}

std::optional<std::string> KvSection::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

std::string KvSection::get_or(const std::string& key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

long long KvSection::get_int(const std::string& key, long long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  errno = 0;
  char* end = nullptr;
  const long long out = std::strtoll(v->c_str(), &end, 10);
  if (errno != 0 || end == v->c_str() || *end != '\0') fail(key, "expected an integer");
  return out;
}

double KvSection::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  errno = 0;
  char* end = nullptr;
  const double out = std::strtod(v->c_str(), &end);
  if (errno != 0 || end == v->c_str() || *end != '\0') fail(key, "expected a number");
  return out;
}

bool KvSection::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(key, "expected true or false");
}

void KvSection::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, entry] : entries_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(key, "unknown key");
    }
  }
}

void KvSection::fail(const std::string& key, const std::string& why) const {
  const auto it = entries_.find(key);
  std::optional<std::size_t> line;
  if (it != entries_.end()) line = it->second.line;
  const auto where = name_.empty() ? key : "[" + name_ + "] " + key;
  throw Error(ErrorCode::InvalidConfig, where + ": " + why, line, origin_);
}

KvConfig KvConfig::parse(std::string_view text, std::string origin,
                         std::filesystem::path base_dir) {
  KvConfig cfg;
  cfg.base_dir_ = std::move(base_dir);
  std::string current;
  cfg.sections_.emplace(current, KvSection(current, origin));

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;

    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorCode::InvalidConfig, "malformed section header", line_no, origin);
      }
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (cfg.sections_.count(current) != 0) {
        throw Error(ErrorCode::InvalidConfig, "duplicate section [" + current + "]", line_no,
                    origin);
      }
      cfg.sections_.emplace(current, KvSection(current, origin));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "expected key = value", line_no, origin);
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(ErrorCode::InvalidConfig, "empty key", line_no, origin);
    auto& section = cfg.sections_.at(current);
    if (section.contains(key)) {
      throw Error(ErrorCode::InvalidConfig, "duplicate key '" + key + "'", line_no, origin);
    }
    section.set(key, std::string(trim(line.substr(eq + 1))), line_no);
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string(), path.parent_path());
}

const KvSection& KvConfig::root() const { return sections_.at(""); }

const KvSection* KvConfig::section(const std::string& name) const {
  const auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

std::vector<std::string> KvConfig::section_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) {
    if (!name.empty()) out.push_back(name);
  }
  return out;
}

std::filesystem::path KvConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

}  // namespace hakkarag
