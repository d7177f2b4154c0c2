#include "parskit/util.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "parskit/error.hpp"

namespace parskit {

namespace {

const char* kHex = "0123456789ABCDEF";

int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

std::string escape_bytes(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char b : raw) {
    if (b == '\\') {
      out += "\\\\";
    } else if (b >= 0x21 && b <= 0x7E) {
      out.push_back(static_cast<char>(b));
    } else {
      out += "\\x";
      out.push_back(kHex[b >> 4]);
      out.push_back(kHex[b & 0x0F]);
    }
  }
  return out;
}

std::string unescape_bytes(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (size_t i = 0; i < escaped.size();) {
    char c = escaped[i];
    if (static_cast<unsigned char>(c) < 0x21 || static_cast<unsigned char>(c) > 0x7E)
      raise(errc::invalid_record, "raw byte in escaped text");  // escaper never emits these
    if (c != '\\') {
      out.push_back(c);
      ++i;
      continue;
    }
    if (i + 1 >= escaped.size()) raise(errc::invalid_record, "dangling escape");
    char n = escaped[i + 1];
    if (n == '\\') {
      out.push_back('\\');
      i += 2;
    } else if (n == 'x') {
      if (i + 3 >= escaped.size()) raise(errc::invalid_record, "truncated \\x escape");
      int hi = hex_val(escaped[i + 2]);
      int lo = hex_val(escaped[i + 3]);
      if (hi < 0 || lo < 0) raise(errc::invalid_record, "bad hex digit in escape");
      out.push_back(static_cast<char>((hi << 4) | lo));
      i += 4;
    } else {
      raise(errc::invalid_record, "unknown escape");
    }
  }
  return out;
}

std::string trim_ascii_ws(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::map<std::string, std::string> parse_kv_text(std::string_view text) {
  std::map<std::string, std::string> kv;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::string trimmed = trim_ascii_ws(line);
    if (trimmed.empty()) continue;

    size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      raise(errc::invalid_config, "line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim_ascii_ws(std::string_view(trimmed).substr(0, eq));
    std::string value = trim_ascii_ws(std::string_view(trimmed).substr(eq + 1));
    if (key.empty()) raise(errc::invalid_config, "line " + std::to_string(line_no) + ": empty key");
    if (kv.count(key)) raise(errc::invalid_config, "duplicate key: " + key);
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  return parse_kv_text(read_file(path));
}

int64_t kv_int(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) raise(errc::invalid_config, "missing key: " + key);
  try {
    size_t used = 0;
    int64_t v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    raise(errc::invalid_config, "key " + key + ": not an integer: " + it->second);
  }
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) raise(errc::invalid_config, "missing key: " + key);
  try {
    size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    raise(errc::invalid_config, "key " + key + ": not a number: " + it->second);
  }
}

bool kv_bool(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) raise(errc::invalid_config, "missing key: " + key);
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  raise(errc::invalid_config, "key " + key + ": not a boolean: " + it->second);
}

std::optional<std::string> kv_opt(const std::map<std::string, std::string>& kv,
                                  const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  return it->second;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) raise(errc::io_error, "read failed: " + path);
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(errc::io_error, "cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) raise(errc::io_error, "write failed: " + path);
}

}  // namespace parskit
