#include "parskit/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "json.hpp"

#include "parskit/error.hpp"
#include "parskit/utf8.hpp"
#include "parskit/util.hpp"

namespace parskit {

namespace {

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c == '_';
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_scheme_char(unsigned char c) {
  return std::isalnum(c) || c == '+' || c == '.' || c == '-';
}

bool is_local_char(unsigned char c) {
  return std::isalnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
}

bool is_domain_char(unsigned char c) {
  return std::isalnum(c) || c == '.' || c == '-';
}

bool is_phone_sep(unsigned char c) {
  return c == '-' || c == '(' || c == ')';
}

// '<' opens a tag that runs to the next '>'; if the line ends first the
// fragment was malformed markup and is stripped to end of line.
std::string strip_tags(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '<') {
      out.push_back(text[i]);
      ++i;
      continue;
    }
    size_t j = i + 1;
    while (j < text.size() && text[j] != '>' && text[j] != '\n') ++j;
    if (j < text.size() && text[j] == '>') {
      i = j + 1;
    } else {
      i = j;  // keep the newline (or stop at end of text)
    }
  }
  return out;
}

std::string strip_urls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t last_end = 0;
  size_t from = 0;
  while (true) {
    size_t at = text.find("://", from);
    if (at == std::string_view::npos) break;
    size_t start = at;
    while (start > last_end && is_scheme_char(static_cast<unsigned char>(text[start - 1]))) --start;
    while (start < at && !std::isalpha(static_cast<unsigned char>(text[start]))) ++start;
    if (start == at) {  // "://" with no scheme is not a URL
      from = at + 3;
      continue;
    }
    size_t end = at + 3;
    while (end < text.size() && !is_ascii_space(static_cast<unsigned char>(text[end]))) ++end;
    out.append(text.substr(last_end, start - last_end));
    last_end = end;
    from = end;
  }
  out.append(text.substr(last_end));
  return out;
}

std::string strip_emails(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t last_end = 0;
  size_t from = 0;
  while (true) {
    size_t at = text.find('@', from);
    if (at == std::string_view::npos) break;
    size_t lstart = at;
    while (lstart > last_end && is_local_char(static_cast<unsigned char>(text[lstart - 1]))) --lstart;
    size_t dend = at + 1;
    while (dend < text.size() && is_domain_char(static_cast<unsigned char>(text[dend]))) ++dend;
    while (dend > at + 1 && (text[dend - 1] == '.' || text[dend - 1] == '-')) --dend;

    std::string_view domain = text.substr(at + 1, dend - at - 1);
    size_t dot = domain.rfind('.');
    bool valid = lstart < at && dot != std::string_view::npos && dot > 0;
    if (valid) {
      std::string_view tld = domain.substr(dot + 1);
      valid = tld.size() >= 2 &&
              std::all_of(tld.begin(), tld.end(),
                          [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
    }
    if (!valid) {
      from = at + 1;
      continue;
    }
    out.append(text.substr(last_end, lstart - last_end));
    last_end = dend;
    from = dend;
  }
  out.append(text.substr(last_end));
  return out;
}

// @ followed by ASCII word characters, at the start of text or after a
// non-word character.  Emails were removed by the preceding pass, so a
// surviving @word really is a mention.
std::string strip_mentions_pass(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t last_end = 0;
  size_t from = 0;
  while (true) {
    size_t at = text.find('@', from);
    if (at == std::string_view::npos) break;
    bool boundary = at == 0 || !is_word_char(static_cast<unsigned char>(text[at - 1]));
    size_t wend = at + 1;
    while (wend < text.size() && is_word_char(static_cast<unsigned char>(text[wend]))) ++wend;
    if (!boundary || wend == at + 1) {
      from = at + 1;
      continue;
    }
    out.append(text.substr(last_end, at - last_end));
    last_end = wend;
    from = wend;
  }
  out.append(text.substr(last_end));
  return out;
}

// Phone-like runs: digits joined by -()  separators or led by '+', with at
// least seven digits in total.  Plain digit runs are left alone so body
// text numerals survive.
std::string strip_phones(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t last_end = 0;
  size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    bool plus_start = c == '+' && i + 1 < text.size() &&
                      std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (i < last_end || (!std::isdigit(c) && !plus_start)) {
      ++i;
      continue;
    }
    size_t j = i + (plus_start ? 1 : 0);
    while (j < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[j])) ||
            is_phone_sep(static_cast<unsigned char>(text[j]))))
      ++j;
    while (j > i && is_phone_sep(static_cast<unsigned char>(text[j - 1]))) --j;

    size_t digits = 0;
    bool has_sep = plus_start;
    for (size_t k = i; k < j; ++k) {
      if (std::isdigit(static_cast<unsigned char>(text[k]))) ++digits;
      if (is_phone_sep(static_cast<unsigned char>(text[k]))) has_sep = true;
    }
    if (digits >= 7 && has_sep) {
      out.append(text.substr(last_end, i - last_end));
      last_end = j;
    }
    i = j > i ? j : i + 1;
  }
  out.append(text.substr(last_end));
  return out;
}

std::string collapse_ws(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_run = false;
  for (char c : text) {
    if (is_ascii_space(static_cast<unsigned char>(c))) {
      in_run = true;
      continue;
    }
    if (in_run) {
      if (!out.empty()) out.push_back(' ');
      in_run = false;
    }
    out.push_back(c);
  }
  return out;  // trailing run dropped = right trim
}

std::string chars_pass(std::string_view text, const NormalizerConfig& cfg) {
  if (cfg.char_map.empty()) return std::string(text);
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    auto it = cfg.char_map.find(cp);
    if (it == cfg.char_map.end()) {
      out.append(text.substr(start, pos - start));
    } else {
      out.append(it->second);
    }
  }
  return out;
}

std::string markup_pass(std::string_view text, const NormalizerConfig& cfg) {
  std::string cur(text);
  if (cfg.strip_html) cur = strip_tags(cur);
  if (cfg.strip_urls_emails_phones) {
    cur = strip_urls(cur);
    cur = strip_emails(cur);
  }
  if (cfg.strip_mentions) cur = strip_mentions_pass(cur);
  if (cfg.strip_urls_emails_phones) cur = strip_phones(cur);
  return cur;
}

std::string punctuation_pass(std::string_view text, const NormalizerConfig& cfg) {
  if (cfg.punctuation_drop_set.empty()) return std::string(text);
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    if (!cfg.punctuation_drop_set.count(cp)) out.append(text.substr(start, pos - start));
  }
  return out;
}

std::string whitespace_pass(std::string_view text, const NormalizerConfig& cfg) {
  if (!cfg.collapse_whitespace) return std::string(text);
  return collapse_ws(text);
}

std::string single_pass(std::string_view text, const NormalizerConfig& cfg) {
  std::string cur(text);
  for (Stage s : cfg.stage_order) {
    switch (s) {
      case Stage::chars: cur = chars_pass(cur, cfg); break;
      case Stage::markup: cur = markup_pass(cur, cfg); break;
      case Stage::punctuation: cur = punctuation_pass(cur, cfg); break;
      case Stage::whitespace: cur = whitespace_pass(cur, cfg); break;
    }
  }
  return cur;
}

std::string codepoint_key(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

char32_t codepoint_from_key(const std::string& key) {
  if (key.size() < 3 || key[0] != 'U' || key[1] != '+')
    raise(errc::invalid_config, "bad codepoint key: " + key);
  char32_t cp = 0;
  for (size_t i = 2; i < key.size(); ++i) {
    char c = key[i];
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else raise(errc::invalid_config, "bad codepoint key: " + key);
    cp = cp * 16 + static_cast<char32_t>(v);
  }
  return cp;
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::chars: return "chars";
    case Stage::markup: return "markup";
    case Stage::punctuation: return "punctuation";
    case Stage::whitespace: return "whitespace";
  }
  return "unknown";
}

Stage stage_from_name(std::string_view name) {
  if (name == "chars") return Stage::chars;
  if (name == "markup") return Stage::markup;
  if (name == "punctuation") return Stage::punctuation;
  if (name == "whitespace") return Stage::whitespace;
  raise(errc::invalid_config, "unknown stage: " + std::string(name));
}

void NormalizerConfig::validate() const {
  if (version < 1) raise(errc::invalid_config, "version must be >= 1");

  if (stage_order.size() != 4)
    raise(errc::invalid_config, "stage_order must list all four stages");
  std::set<Stage> seen(stage_order.begin(), stage_order.end());
  if (seen.size() != 4)
    raise(errc::invalid_config, "stage_order must list each stage exactly once");
  if (stage_order.back() != Stage::whitespace)
    raise(errc::invalid_config, "whitespace collapse must run last");

  for (const auto& [cp, repl] : char_map) {
    if (!is_valid_utf8(repl))
      raise(errc::invalid_config, "replacement for " + codepoint_key(cp) + " is not valid UTF-8");
    size_t pos = 0;
    while (pos < repl.size()) {
      char32_t rc = decode_utf8(repl, pos);
      if (char_map.count(rc))
        raise(errc::invalid_config,
              "replacement for " + codepoint_key(cp) + " contains mapped codepoint " +
                  codepoint_key(rc) + " (char map would not be idempotent)");
    }
  }

  if (collapse_whitespace) {
    if (char_map.count(U' '))
      raise(errc::invalid_config, "space cannot be mapped while whitespace collapse is on");
    if (punctuation_drop_set.count(U' '))
      raise(errc::invalid_config, "space cannot be dropped while whitespace collapse is on");
  }
}

std::string NormalizerConfig::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  nlohmann::json cm = nlohmann::json::object();
  for (const auto& [cp, repl] : char_map) cm[codepoint_key(cp)] = repl;
  j["char_map"] = cm;
  j["strip_html"] = strip_html;
  j["strip_urls_emails_phones"] = strip_urls_emails_phones;
  j["strip_mentions"] = strip_mentions;
  nlohmann::json drops = nlohmann::json::array();
  for (char32_t cp : punctuation_drop_set) drops.push_back(codepoint_key(cp));
  j["punctuation_drop_set"] = drops;
  j["collapse_whitespace"] = collapse_whitespace;
  nlohmann::json stages = nlohmann::json::array();
  for (Stage s : stage_order) stages.push_back(stage_name(s));
  j["stage_order"] = stages;
  return j.dump(-1, ' ', true);
}

NormalizerConfig NormalizerConfig::from_json(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_config, std::string("bad config JSON: ") + e.what());
  }
  NormalizerConfig cfg;
  cfg.char_map.clear();
  cfg.stage_order.clear();
  try {
    cfg.version = j.at("version").get<int>();
    for (const auto& [key, value] : j.at("char_map").items())
      cfg.char_map[codepoint_from_key(key)] = value.get<std::string>();
    cfg.strip_html = j.at("strip_html").get<bool>();
    cfg.strip_urls_emails_phones = j.at("strip_urls_emails_phones").get<bool>();
    cfg.strip_mentions = j.at("strip_mentions").get<bool>();
    for (const auto& item : j.at("punctuation_drop_set"))
      cfg.punctuation_drop_set.insert(codepoint_from_key(item.get<std::string>()));
    cfg.collapse_whitespace = j.at("collapse_whitespace").get<bool>();
    for (const auto& item : j.at("stage_order"))
      cfg.stage_order.push_back(stage_from_name(item.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_config, std::string("bad config field: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void NormalizerConfig::save(const std::string& path) const {
  write_file(path, to_json() + "\n");
}

NormalizerConfig NormalizerConfig::load(const std::string& path) {
  return from_json(read_file(path));
}

NormalizerConfig NormalizerConfig::default_v1() {
  NormalizerConfig cfg;
  cfg.version = 1;

  auto& cm = cfg.char_map;
  cm[0x064A] = encode_utf8(0x06CC);  // Arabic yeh -> Persian yeh
  cm[0x0649] = encode_utf8(0x06CC);  // alef maksura -> Persian yeh
  cm[0x0643] = encode_utf8(0x06A9);  // Arabic kaf -> keheh
  for (char32_t d = 0; d < 10; ++d)
    cm[0x0660 + d] = encode_utf8(0x06F0 + d);  // Arabic-Indic -> Persian digits
  cm[0x00A0] = " ";                  // no-break space
  cm[0x200B] = encode_utf8(0x200C);  // zero-width space -> ZWNJ
  cm[0x200D] = "";                   // zero-width joiner
  cm[0xFEFF] = "";                   // BOM / zero-width no-break space
  cm[0x0640] = "";                   // tatweel
  for (char32_t cp = 0x064B; cp <= 0x0652; ++cp) cm[cp] = "";  // harakat

  cfg.punctuation_drop_set = {U'!', U'?', 0x061F /* ? */, 0x060C /* , */,
                              0x061B /* ; */, 0x00AB /* << */, 0x00BB /* >> */,
                              U'"', U'*', U'_', U'~', 0x2026 /* ... */};

  cfg.validate();
  return cfg;
}

NormalizerConfig NormalizerConfig::identity() {
  NormalizerConfig cfg;
  cfg.strip_html = false;
  cfg.strip_urls_emails_phones = false;
  cfg.strip_mentions = false;
  cfg.collapse_whitespace = false;
  return cfg;
}

std::string normalize_chars(std::string_view text, const NormalizerConfig& cfg) {
  if (!is_valid_utf8(text)) raise(errc::invalid_encoding, "normalize_chars input");
  return chars_pass(text, cfg);
}

std::string strip_markup(std::string_view text, const NormalizerConfig& cfg) {
  if (!is_valid_utf8(text)) raise(errc::invalid_encoding, "strip_markup input");
  return markup_pass(text, cfg);
}

std::string clean_punctuation(std::string_view text, const NormalizerConfig& cfg) {
  if (!is_valid_utf8(text)) raise(errc::invalid_encoding, "clean_punctuation input");
  return punctuation_pass(text, cfg);
}

NormalizedDocument normalize_document(std::string_view raw, const NormalizerConfig& cfg,
                                      std::string source_id) {
  if (!is_valid_utf8(raw)) raise(errc::invalid_encoding, "document is not valid UTF-8");
  cfg.validate();

  // Deletions in later stages can expose fresh matches for earlier ones
  // (dropping punctuation may fuse a phone-like run, for example), so the
  // pipeline repeats until the text stops changing.  After the first pass
  // the char map can no longer grow the text, which bounds the loop.
  std::string cur = single_pass(raw, cfg);
  while (true) {
    std::string next = single_pass(cur, cfg);
    if (next == cur) break;
    cur = std::move(next);
  }

  NormalizedDocument doc;
  doc.dropped = trim_ascii_ws(cur).empty();
  doc.text = std::move(cur);
  doc.source_id = std::move(source_id);
  return doc;
}

}  // namespace parskit
