#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace parskit {

// Strict UTF-8 handling: overlong forms, surrogates and values past
// U+10FFFF are rejected everywhere.  All text entering the library goes
// through these helpers, so downstream code can assume well-formed input.

bool is_valid_utf8(std::string_view text);

// Decodes the codepoint starting at `pos` and advances `pos` past it.
// Throws errc::invalid_encoding on malformed input.
char32_t decode_utf8(std::string_view text, size_t& pos);

void append_utf8(std::string& out, char32_t cp);

std::string encode_utf8(char32_t cp);

// Number of bytes the codepoint at `pos` occupies, without validation of
// the continuation payload (used by scanners that already validated).
size_t utf8_len(unsigned char lead);

}  // namespace parskit
