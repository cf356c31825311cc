#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ivtrial {

/// Flat "key = value" file: one pair per line, '#' starts a comment, keys
/// unique. Order of appearance is kept.
struct KeyValueFile {
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };
  std::string source;
  std::vector<Entry> entries;

  const Entry* find(std::string_view key) const noexcept;
};

/// Throws ParseError naming the source and line.
KeyValueFile parse_key_values(std::string_view text, std::string source = "<text>");
KeyValueFile load_key_values(const std::string& path);

double parse_double(std::string_view text, std::string_view what);
std::uint64_t parse_u64(std::string_view text, std::string_view what);

}  // namespace ivtrial
