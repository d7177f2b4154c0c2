#include "parskit/utf8.hpp"

#include "parskit/error.hpp"

namespace parskit {

namespace {

bool is_cont(unsigned char b) { return (b & 0xC0) == 0x80; }

}  // namespace

size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 0;
}

char32_t decode_utf8(std::string_view text, size_t& pos) {
  if (pos >= text.size()) raise(errc::invalid_encoding, "decode past end of text");
  unsigned char b0 = static_cast<unsigned char>(text[pos]);
  size_t len = utf8_len(b0);
  if (len == 0) raise(errc::invalid_encoding, "bad lead byte");
  if (pos + len > text.size()) raise(errc::invalid_encoding, "truncated sequence");

  char32_t cp = 0;
  switch (len) {
    case 1:
      cp = b0;
      break;
    case 2:
      cp = b0 & 0x1F;
      break;
    case 3:
      cp = b0 & 0x0F;
      break;
    case 4:
      cp = b0 & 0x07;
      break;
  }
  for (size_t i = 1; i < len; ++i) {
    unsigned char b = static_cast<unsigned char>(text[pos + i]);
    if (!is_cont(b)) raise(errc::invalid_encoding, "bad continuation byte");
    cp = (cp << 6) | (b & 0x3F);
  }

  // Overlongs, surrogates, out of range.
  if (len == 2 && cp < 0x80) raise(errc::invalid_encoding, "overlong sequence");
  if (len == 3 && cp < 0x800) raise(errc::invalid_encoding, "overlong sequence");
  if (len == 4 && cp < 0x10000) raise(errc::invalid_encoding, "overlong sequence");
  if (cp >= 0xD800 && cp <= 0xDFFF) raise(errc::invalid_encoding, "surrogate codepoint");
  if (cp > 0x10FFFF) raise(errc::invalid_encoding, "codepoint out of range");

  pos += len;
  return cp;
}

bool is_valid_utf8(std::string_view text) {
  size_t pos = 0;
  try {
    while (pos < text.size()) decode_utf8(text, pos);
  } catch (const Error&) {
    return false;
  }
  return true;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp >= 0xD800 && cp <= 0xDFFF) raise(errc::invalid_encoding, "surrogate codepoint");
  if (cp <= 0x7F) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7FF) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp <= 0xFFFF) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp <= 0x10FFFF) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    raise(errc::invalid_encoding, "codepoint out of range");
  }
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  append_utf8(out, cp);
  return out;
}

}  // namespace parskit
