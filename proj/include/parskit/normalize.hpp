#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace parskit {

// Text cleaning for Persian web corpora: character unification (Arabic vs
// Persian letter forms, digit forms, zero-width characters), markup and
// contact-pattern removal, punctuation filtering and whitespace collapse.

enum class Stage { chars, markup, punctuation, whitespace };

const char* stage_name(Stage s);
Stage stage_from_name(std::string_view name);  // throws invalid_config

struct NormalizerConfig {
  int version = 1;

  // codepoint -> replacement (UTF-8, possibly empty = delete).  Replacement
  // strings must not contain mapped codepoints, which makes the char pass
  // idempotent by construction; validate() enforces this.
  std::map<char32_t, std::string> char_map;

  bool strip_html = true;
  bool strip_urls_emails_phones = true;
  bool strip_mentions = true;

  std::set<char32_t> punctuation_drop_set;

  bool collapse_whitespace = true;

  // Each stage exactly once; whitespace last so collapse sees the final
  // text.  The default order is chars, markup, punctuation, whitespace:
  // markup patterns must run after character unification and punctuation
  // filtering must not eat pattern characters before the scanners see them.
  std::vector<Stage> stage_order = {Stage::chars, Stage::markup,
                                    Stage::punctuation, Stage::whitespace};

  void validate() const;  // throws invalid_config

  std::string to_json() const;                       // compact, ASCII only
  static NormalizerConfig from_json(std::string_view json);

  void save(const std::string& path) const;
  static NormalizerConfig load(const std::string& path);

  // Version 1 defaults: Arabic yeh/alef-maksura -> Persian yeh, Arabic kaf
  // -> keheh, Arabic-Indic digits -> Persian digits, kashida and Arabic
  // diacritics removed, NBSP -> space, ZWSP -> ZWNJ, ZWJ/BOM removed, plus
  // a conservative punctuation drop set.  Mirrored in data/normalizer_v1.json.
  static NormalizerConfig default_v1();

  // Everything off: normalize_document validates encoding and nothing else.
  static NormalizerConfig identity();

  bool operator==(const NormalizerConfig&) const = default;
};

struct NormalizedDocument {
  std::string text;
  std::string source_id;
  bool dropped = false;  // true iff text is empty after trimming
};

// Single-pass stage primitives.  Input must be valid UTF-8 (checked).
std::string normalize_chars(std::string_view text, const NormalizerConfig& cfg);

// Removes, in this order: HTML-like tags (an unclosed '<' strips to end of
// line), scheme-prefixed URLs, x@y.z emails, @-mentions (ASCII word chars,
// at a non-word boundary), and phone-like runs (>= 7 digits joined by
// '-', '(' or ')' separators or prefixed with '+'; plain digit runs are
// kept so ordinary numerals survive).
std::string strip_markup(std::string_view text, const NormalizerConfig& cfg);

std::string clean_punctuation(std::string_view text, const NormalizerConfig& cfg);

// Runs the stages in cfg.stage_order and repeats the pipeline until the
// text is stable, so deletions in late stages cannot leave behind fresh
// matches for earlier ones.  Throws errc::invalid_encoding on bad UTF-8.
NormalizedDocument normalize_document(std::string_view raw,
                                      const NormalizerConfig& cfg,
                                      std::string source_id = "");

}  // namespace parskit
