#include "ivtrial/config.hpp"

#include "ivtrial/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ivtrial {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

const KeyValueFile::Entry* KeyValueFile::find(std::string_view key) const noexcept {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

KeyValueFile parse_key_values(std::string_view text, std::string source) {
  KeyValueFile out;
  out.source = std::move(source);
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = out.source + " line " + std::to_string(line_no);
    if (eq == std::string::npos) throw Error(ErrorKind::ParseError, where + ": expected 'key = value'");
    auto key = trim(std::string_view(line).substr(0, eq));
    auto value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ParseError, where + ": empty key");
    if (!seen.insert(key).second) throw Error(ErrorKind::ParseError, where + ": duplicate key '" + key + "'");
    out.entries.push_back({std::move(key), std::move(value), line_no});
  }
  return out;
}

KeyValueFile load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str(), path);
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorKind::InvalidParam, std::string(what) + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::InvalidParam,
                std::string(what) + ": '" + std::string(text) + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace ivtrial
