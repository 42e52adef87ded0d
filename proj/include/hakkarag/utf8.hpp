#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 helpers. All character counts in the library are Unicode
// scalar values, never bytes.
namespace hakkarag::utf8 {

bool is_valid(std::string_view bytes);

// Decodes valid UTF-8; throws Error(MalformedRecord) on invalid input.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

std::size_t length(std::string_view bytes);

// Byte offset of the `cp_index`-th code point (or bytes.size() at the end).
std::size_t byte_offset(std::string_view bytes, std::size_t cp_index);

// Substring by code-point range [begin, end).
std::string substr(std::string_view bytes, std::size_t begin, std::size_t end);

// ASCII-only lowercase; multi-byte sequences are left untouched.
std::string ascii_lower(std::string_view s);

}  // namespace hakkarag::utf8
