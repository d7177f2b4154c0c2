#include "doctest.h"

#include <random>

#include "parskit/error.hpp"
#include "parskit/utf8.hpp"
#include "parskit/util.hpp"

using namespace parskit;

TEST_CASE("escape_bytes keeps printable ascii and escapes the rest") {
  CHECK(escape_bytes("abc") == "abc");
  CHECK(escape_bytes("a b") == "a\\x20b");
  CHECK(escape_bytes("\\") == "\\\\");
  CHECK(escape_bytes(std::string("\x00\x01", 2)) == "\\x00\\x01");
  CHECK(escape_bytes("\xE2\x96\x81") == "\\xE2\\x96\\x81");
}

TEST_CASE("escape_bytes roundtrips arbitrary byte strings") {
  std::mt19937 rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::string raw;
    size_t len = rng() % 24;
    for (size_t j = 0; j < len; ++j) raw.push_back(static_cast<char>(rng() & 0xFF));
    std::string escaped = escape_bytes(raw);
    CHECK(escaped.find(' ') == std::string::npos);
    CHECK(escaped.find('\n') == std::string::npos);
    CHECK(unescape_bytes(escaped) == raw);
  }
}

TEST_CASE("unescape_bytes rejects malformed escapes") {
  CHECK_THROWS_AS(unescape_bytes("\\x"), Error);
  CHECK_THROWS_AS(unescape_bytes("\\xZ1"), Error);
  CHECK_THROWS_AS(unescape_bytes("\\x4"), Error);
  CHECK_THROWS_AS(unescape_bytes("a\\"), Error);
  CHECK_THROWS_AS(unescape_bytes("a b"), Error);
}

TEST_CASE("kv parsing") {
  auto kv = parse_kv_text("# comment\nalpha = 32\nname = model a\n\nflag=true\n");
  CHECK(kv_int(kv, "alpha") == 32);
  CHECK(*kv_opt(kv, "name") == "model a");
  CHECK(kv_bool(kv, "flag"));
  CHECK(!kv_opt(kv, "missing"));
  CHECK_THROWS_AS(kv_int(kv, "missing"), Error);
  CHECK_THROWS_AS(kv_int(kv, "name"), Error);
  CHECK_THROWS_AS(parse_kv_text("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(parse_kv_text("just words\n"), Error);
}

TEST_CASE("utf8 validation accepts real text and rejects junk") {
  CHECK(is_valid_utf8("سلام دنیا 🙂"));
  CHECK(is_valid_utf8(""));
  CHECK(!is_valid_utf8("\xFF"));
  CHECK(!is_valid_utf8("\xC0\xAF"));              // overlong
  CHECK(!is_valid_utf8("\xED\xA0\x80"));          // surrogate
  CHECK(!is_valid_utf8(std::string("\xE2\x96", 2)));  // truncated
}

TEST_CASE("utf8 decode/encode roundtrip over the whole scalar range") {
  std::mt19937 rng(11);
  for (int i = 0; i < 5000; ++i) {
    char32_t cp = rng() % 0x110000;
    if (cp >= 0xD800 && cp <= 0xDFFF) continue;
    std::string s = encode_utf8(cp);
    size_t pos = 0;
    CHECK(decode_utf8(s, pos) == cp);
    CHECK(pos == s.size());
  }
}
