#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hsi/error.hpp"

namespace hsi::io {

namespace fs = std::filesystem;

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
  const std::string t = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw DataError("cannot parse " + what + " from '" + t + "'");
  return v;
}

inline long long parse_int(std::string_view s, const std::string& what) {
  const std::string t = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw DataError("cannot parse " + what + " from '" + t + "'");
  return v;
}

/// `key: value` header, one entry per line; '#' starts a comment line.
using Header = std::map<std::string, std::string>;

inline Header read_header(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open header " + path.string());
  Header h;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 'key: value'");
    h[trim(std::string_view(t).substr(0, colon))] = trim(std::string_view(t).substr(colon + 1));
  }
  return h;
}

inline const std::string& require(const Header& h, const std::string& key, const fs::path& path) {
  auto it = h.find(key);
  if (it == h.end()) throw DataError(path.string() + ": missing header key '" + key + "'");
  return it->second;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw DataError("write failed for " + path.string());
}

/// Decodes little-endian IEEE-754 binary32 values.
inline std::vector<float> decode_f32_le(const std::vector<std::uint8_t>& bytes) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = std::uint32_t(bytes[4 * i]) | (std::uint32_t(bytes[4 * i + 1]) << 8) |
                      (std::uint32_t(bytes[4 * i + 2]) << 16) | (std::uint32_t(bytes[4 * i + 3]) << 24);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

inline std::vector<std::uint8_t> encode_f32_le(const std::vector<float>& values) {
  std::vector<std::uint8_t> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(values[i]);
    out[4 * i] = std::uint8_t(u & 0xff);
    out[4 * i + 1] = std::uint8_t((u >> 8) & 0xff);
    out[4 * i + 2] = std::uint8_t((u >> 16) & 0xff);
    out[4 * i + 3] = std::uint8_t((u >> 24) & 0xff);
  }
  return out;
}

/// Resolves a payload path named in a header relative to the header's directory.
inline fs::path sibling(const fs::path& header, const std::string& name) {
  fs::path p(name);
  return p.is_absolute() ? p : header.parent_path() / p;
}

}  // namespace hsi::io
