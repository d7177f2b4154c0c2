#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace parskit {

// Reversible byte-string escaping used by the tokenizer model file and by
// report output.  Printable ASCII except backslash is kept verbatim, every
// other byte becomes \xHH (uppercase hex).  The escaped form never contains
// spaces or control bytes, so escaped payloads are safe as the final field
// of a whitespace-separated line.
std::string escape_bytes(std::string_view raw);
std::string unescape_bytes(std::string_view escaped);  // throws invalid_record

std::string trim_ascii_ws(std::string_view s);

std::vector<std::string> split_ws(std::string_view s);

// key = value files with '#' comments.  Throws invalid_config on syntax
// errors or duplicate keys.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(std::string_view text);

int64_t kv_int(const std::map<std::string, std::string>& kv, const std::string& key);
double kv_double(const std::map<std::string, std::string>& kv, const std::string& key);
bool kv_bool(const std::map<std::string, std::string>& kv, const std::string& key);
std::optional<std::string> kv_opt(const std::map<std::string, std::string>& kv, const std::string& key);

std::string read_file(const std::string& path);          // throws io_error
void write_file(const std::string& path, std::string_view content);

}  // namespace parskit
