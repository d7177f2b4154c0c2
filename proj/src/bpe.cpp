#include "parskit/bpe.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

#include "parskit/error.hpp"
#include "parskit/utf8.hpp"
#include "parskit/util.hpp"

namespace parskit {

namespace {

constexpr char32_t kMarkerCp = 0x2581;
constexpr size_t kEncodeCacheCap = 1 << 16;

uint64_t pack_pair(int32_t l, int32_t r) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(l)) << 32) |
         static_cast<uint32_t>(r);
}

bool is_ws_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

const char* token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::special: return "special";
    case TokenKind::byte: return "byte";
    case TokenKind::marker: return "marker";
    case TokenKind::piece: return "piece";
  }
  return "unknown";
}

TokenKind token_kind_from_name(std::string_view name) {
  if (name == "special") return TokenKind::special;
  if (name == "byte") return TokenKind::byte;
  if (name == "marker") return TokenKind::marker;
  if (name == "piece") return TokenKind::piece;
  raise(errc::invalid_record, "unknown token kind: " + std::string(name));
}

std::vector<Segment> split_segments(std::string_view text) {
  std::vector<Segment> out;
  size_t start = 0;
  bool marked = false;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] == ' ') {
      out.push_back({marked, std::string(text.substr(start, i - start))});
      marked = true;
      start = i + 1;
    }
  }
  out.push_back({marked, std::string(text.substr(start))});
  return out;
}

// ---------------------------------------------------------------------------
// TokenizerModel

TokenizerModel TokenizerModel::from_parts(std::vector<TokenEntry> entries,
                                          std::vector<MergeRule> merges,
                                          NormalizerConfig normalizer,
                                          bool byte_fallback,
                                          std::string whitespace_marker,
                                          std::vector<std::string> specials) {
  TokenizerModel m;
  m.entries_ = std::move(entries);
  m.merges_ = std::move(merges);
  m.normalizer_ = std::move(normalizer);
  m.byte_fallback_ = byte_fallback;
  m.whitespace_marker_ = std::move(whitespace_marker);
  m.specials_ = std::move(specials);
  m.validate();
  m.build_indexes();
  return m;
}

void TokenizerModel::validate() const {
  normalizer_.validate();
  if (whitespace_marker_.empty() || !is_valid_utf8(whitespace_marker_))
    raise(errc::invalid_record, "whitespace marker must be non-empty UTF-8");

  if (entries_.size() > static_cast<size_t>(std::numeric_limits<int32_t>::max()))
    raise(errc::invalid_record, "vocabulary too large for 32-bit ids");

  for (size_t i = 0; i < specials_.size(); ++i) {
    if (i >= entries_.size() || entries_[i].kind != TokenKind::special ||
        entries_[i].bytes != specials_[i])
      raise(errc::invalid_record, "specials must occupy the lowest ids in declared order");
  }

  std::set<std::pair<TokenKind, std::string>> seen;
  size_t byte_count = 0;
  size_t marker_count = 0;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const TokenEntry& e = entries_[i];
    if (e.bytes.empty()) raise(errc::invalid_record, "empty token payload at id " + std::to_string(i));
    if (e.kind == TokenKind::special && i >= specials_.size())
      raise(errc::invalid_record, "special token outside the reserved range at id " + std::to_string(i));
    if (e.kind == TokenKind::byte) {
      if (e.bytes.size() != 1) raise(errc::invalid_record, "byte token payload must be one byte");
      ++byte_count;
    }
    if (e.kind == TokenKind::marker) {
      if (e.bytes != whitespace_marker_)
        raise(errc::invalid_record, "marker entry must equal the whitespace marker");
      ++marker_count;
    }
    if (!seen.insert({e.kind, e.bytes}).second)
      raise(errc::duplicate_id_corruption,
            "duplicate token at id " + std::to_string(i) + ": " + escape_bytes(e.bytes));
  }
  if (marker_count > 1) raise(errc::invalid_record, "more than one marker entry");

  if (byte_fallback_) {
    if (byte_count != 256)
      raise(errc::invalid_record, "byte fallback requires all 256 byte tokens");
    for (size_t k = 0; k < 256; ++k) {
      size_t at = specials_.size() + k;
      if (at >= entries_.size() || entries_[at].kind != TokenKind::byte ||
          static_cast<unsigned char>(entries_[at].bytes[0]) != k)
        raise(errc::invalid_record, "byte tokens must follow the specials in value order");
    }
  }

  for (size_t rank = 0; rank < merges_.size(); ++rank) {
    const MergeRule& r = merges_[rank];
    auto in_range = [&](int32_t id) {
      return id >= 0 && static_cast<size_t>(id) < entries_.size();
    };
    if (!in_range(r.left_id) || !in_range(r.right_id) || !in_range(r.new_id))
      raise(errc::invalid_record, "merge rank " + std::to_string(rank) + " references a bad id");
    const TokenEntry& l = entries_[r.left_id];
    const TokenEntry& rr = entries_[r.right_id];
    const TokenEntry& n = entries_[r.new_id];
    auto mergeable = [](TokenKind k) { return k == TokenKind::piece || k == TokenKind::marker; };
    if (!mergeable(l.kind) || !mergeable(rr.kind) || n.kind != TokenKind::piece)
      raise(errc::invalid_record, "merge rank " + std::to_string(rank) + " uses non-piece tokens");
    if (n.bytes != l.bytes + rr.bytes)
      raise(errc::invalid_record,
            "merge rank " + std::to_string(rank) + " output does not equal left + right");
  }
}

void TokenizerModel::build_indexes() {
  byte_ids_.fill(-1);
  piece_ids_.clear();
  merge_ranks_.clear();
  marker_id_ = -1;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const TokenEntry& e = entries_[i];
    int32_t id = static_cast<int32_t>(i);
    switch (e.kind) {
      case TokenKind::byte:
        byte_ids_[static_cast<unsigned char>(e.bytes[0])] = id;
        break;
      case TokenKind::marker:
        marker_id_ = id;
        break;
      case TokenKind::piece:
        piece_ids_.emplace(e.bytes, id);
        break;
      case TokenKind::special:
        break;
    }
  }
  for (size_t rank = 0; rank < merges_.size(); ++rank) {
    const MergeRule& r = merges_[rank];
    // first (lowest) rank wins for a repeated pair
    merge_ranks_.emplace(pack_pair(r.left_id, r.right_id),
                         std::make_pair(static_cast<int32_t>(rank), r.new_id));
  }
}

std::optional<int32_t> TokenizerModel::piece_id(std::string_view piece_bytes) const {
  auto it = piece_ids_.find(std::string(piece_bytes));
  if (it == piece_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<int32_t> TokenizerModel::byte_id(unsigned char b) const {
  if (byte_ids_[b] < 0) return std::nullopt;
  return byte_ids_[b];
}

std::optional<int32_t> TokenizerModel::marker_id() const {
  if (marker_id_ < 0) return std::nullopt;
  return marker_id_;
}

std::vector<int32_t> TokenizerModel::encode(std::string_view text) const {
  if (!is_valid_utf8(text)) raise(errc::invalid_encoding, "encode input is not valid UTF-8");

  std::vector<int32_t> out;
  for (const Segment& seg : split_segments(text)) {
    if (!seg.marked && seg.bytes.empty()) continue;

    std::string cache_key;
    cache_key.reserve(seg.bytes.size() + 1);
    cache_key.push_back(seg.marked ? 'M' : 'U');
    cache_key += seg.bytes;
    auto hit = encode_cache_.find(cache_key);
    if (hit != encode_cache_.end()) {
      out.insert(out.end(), hit->second.begin(), hit->second.end());
      continue;
    }

    std::vector<int32_t> syms;
    auto push_bytes = [&](std::string_view bytes) {
      for (unsigned char b : bytes) {
        int32_t id = byte_ids_[b];
        if (id < 0) raise(errc::unknown_id, "no byte token for fallback");
        syms.push_back(id);
      }
    };

    if (seg.marked) {
      if (marker_id_ >= 0) {
        syms.push_back(marker_id_);
      } else {
        push_bytes(" ");
      }
    }
    size_t pos = 0;
    while (pos < seg.bytes.size()) {
      size_t start = pos;
      char32_t cp = decode_utf8(seg.bytes, pos);
      std::string_view char_bytes = std::string_view(seg.bytes).substr(start, pos - start);
      if (cp == kMarkerCp) {  // literal marker character goes through bytes
        push_bytes(char_bytes);
        continue;
      }
      auto it = piece_ids_.find(std::string(char_bytes));
      if (it != piece_ids_.end()) {
        syms.push_back(it->second);
      } else {
        push_bytes(char_bytes);
      }
    }

    // Lowest-rank applicable merge first; each application rewrites every
    // non-overlapping occurrence left to right.
    while (syms.size() >= 2) {
      int32_t best_rank = std::numeric_limits<int32_t>::max();
      int32_t best_l = -1, best_r = -1, best_new = -1;
      for (size_t i = 0; i + 1 < syms.size(); ++i) {
        auto it = merge_ranks_.find(pack_pair(syms[i], syms[i + 1]));
        if (it != merge_ranks_.end() && it->second.first < best_rank) {
          best_rank = it->second.first;
          best_l = syms[i];
          best_r = syms[i + 1];
          best_new = it->second.second;
        }
      }
      if (best_l < 0) break;
      std::vector<int32_t> next;
      next.reserve(syms.size());
      for (size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == best_l && syms[i + 1] == best_r) {
          next.push_back(best_new);
          i += 2;
        } else {
          next.push_back(syms[i]);
          ++i;
        }
      }
      syms = std::move(next);
    }

    if (encode_cache_.size() >= kEncodeCacheCap) encode_cache_.clear();
    encode_cache_.emplace(std::move(cache_key), syms);
    out.insert(out.end(), syms.begin(), syms.end());
  }
  return out;
}

std::string TokenizerModel::decode_one(int32_t id) const {
  if (id < 0 || static_cast<size_t>(id) >= entries_.size())
    raise(errc::unknown_id, "id " + std::to_string(id) + " out of range");
  const TokenEntry& e = entries_[id];
  switch (e.kind) {
    case TokenKind::special:
      return "";
    case TokenKind::byte:
      return e.bytes;
    case TokenKind::marker:
      return " ";
    case TokenKind::piece:
      if (e.bytes.starts_with(whitespace_marker_))
        return " " + e.bytes.substr(whitespace_marker_.size());
      return e.bytes;
  }
  return "";
}

std::string TokenizerModel::decode(std::span<const int32_t> ids) const {
  std::string out;
  for (int32_t id : ids) out += decode_one(id);
  return out;
}

std::string TokenizerModel::piece_display(int32_t id) const {
  if (id < 0 || static_cast<size_t>(id) >= entries_.size())
    raise(errc::unknown_id, "id " + std::to_string(id) + " out of range");
  const TokenEntry& e = entries_[id];
  std::string raw;
  switch (e.kind) {
    case TokenKind::special:
      raw = e.bytes;
      break;
    case TokenKind::byte: {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "<0x%02X>", static_cast<unsigned char>(e.bytes[0]));
      return buf;
    }
    case TokenKind::marker:
    case TokenKind::piece:
      raw = e.bytes;
      break;
  }
  std::string out;
  for (unsigned char b : raw) {
    if (b < 0x20 || b == 0x7F) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\x%02X", b);
      out += buf;
    } else {
      out.push_back(static_cast<char>(b));
    }
  }
  return out;
}

std::string TokenizerModel::to_text() const {
  std::ostringstream out;
  out << "parskit tokenizer model v1\n";
  out << "byte_fallback " << (byte_fallback_ ? 1 : 0) << "\n";
  out << "whitespace_marker " << escape_bytes(whitespace_marker_) << "\n";
  out << "specials " << specials_.size();
  for (const std::string& s : specials_) out << " " << escape_bytes(s);
  out << "\n";
  out << "normalizer " << normalizer_.to_json() << "\n";
  out << "vocab " << entries_.size() << "\n";
  for (size_t i = 0; i < entries_.size(); ++i)
    out << i << " " << token_kind_name(entries_[i].kind) << " "
        << escape_bytes(entries_[i].bytes) << "\n";
  out << "merges " << merges_.size() << "\n";
  for (size_t rank = 0; rank < merges_.size(); ++rank)
    out << rank << " " << merges_[rank].left_id << " " << merges_[rank].right_id
        << " " << merges_[rank].new_id << "\n";
  out << "end\n";
  return out.str();
}

namespace {

class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : text_(text) {}

  std::string_view next() {
    if (pos_ > text_.size()) raise(errc::invalid_record, "tokenizer model truncated");
    size_t nl = text_.find('\n', pos_);
    std::string_view line;
    if (nl == std::string_view::npos) {
      line = text_.substr(pos_);
      pos_ = text_.size() + 1;
    } else {
      line = text_.substr(pos_, nl - pos_);
      pos_ = nl + 1;
    }
    ++line_no_;
    return line;
  }

  size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  size_t line_no_ = 0;
};

int64_t parse_int(std::string_view s, const char* what) {
  try {
    size_t used = 0;
    int64_t v = std::stoll(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    raise(errc::invalid_record, std::string("bad integer for ") + what + ": " + std::string(s));
  }
}

}  // namespace

TokenizerModel TokenizerModel::from_text(std::string_view text) {
  LineCursor cur(text);
  if (cur.next() != "parskit tokenizer model v1")
    raise(errc::invalid_record, "not a parskit tokenizer model");

  auto expect_field = [&](std::string_view line, std::string_view key) {
    if (!line.starts_with(key) || line.size() < key.size() + 1 || line[key.size()] != ' ')
      raise(errc::invalid_record, "expected '" + std::string(key) + "' line");
    return line.substr(key.size() + 1);
  };

  bool byte_fallback = parse_int(expect_field(cur.next(), "byte_fallback"), "byte_fallback") != 0;
  std::string marker = unescape_bytes(expect_field(cur.next(), "whitespace_marker"));

  std::vector<std::string> fields;
  {
    std::string_view rest = expect_field(cur.next(), "specials");
    for (const std::string& tok : split_ws(rest)) fields.push_back(tok);
  }
  if (fields.empty()) raise(errc::invalid_record, "specials line missing count");
  size_t n_specials = static_cast<size_t>(parse_int(fields[0], "specials count"));
  if (fields.size() != n_specials + 1)
    raise(errc::invalid_record, "specials count does not match the list");
  std::vector<std::string> specials;
  for (size_t i = 0; i < n_specials; ++i) specials.push_back(unescape_bytes(fields[i + 1]));

  NormalizerConfig normalizer =
      NormalizerConfig::from_json(expect_field(cur.next(), "normalizer"));

  size_t n_vocab = static_cast<size_t>(parse_int(expect_field(cur.next(), "vocab"), "vocab count"));
  std::vector<TokenEntry> entries;
  entries.reserve(n_vocab);
  for (size_t i = 0; i < n_vocab; ++i) {
    std::string_view line = cur.next();
    auto parts = split_ws(line);
    if (parts.size() != 3)
      raise(errc::invalid_record, "vocab line " + std::to_string(cur.line_no()) + " malformed");
    if (static_cast<size_t>(parse_int(parts[0], "vocab id")) != i)
      raise(errc::invalid_record, "vocab ids must be contiguous from 0");
    entries.push_back({token_kind_from_name(parts[1]), unescape_bytes(parts[2])});
  }

  size_t n_merges = static_cast<size_t>(parse_int(expect_field(cur.next(), "merges"), "merge count"));
  std::vector<MergeRule> merges;
  merges.reserve(n_merges);
  for (size_t i = 0; i < n_merges; ++i) {
    auto parts = split_ws(cur.next());
    if (parts.size() != 4)
      raise(errc::invalid_record, "merge line " + std::to_string(cur.line_no()) + " malformed");
    if (static_cast<size_t>(parse_int(parts[0], "merge rank")) != i)
      raise(errc::invalid_record, "merge ranks must be dense from 0");
    merges.push_back({static_cast<int32_t>(parse_int(parts[1], "merge left")),
                      static_cast<int32_t>(parse_int(parts[2], "merge right")),
                      static_cast<int32_t>(parse_int(parts[3], "merge new"))});
  }

  if (cur.next() != "end") raise(errc::invalid_record, "missing end marker");

  return from_parts(std::move(entries), std::move(merges), std::move(normalizer),
                    byte_fallback, std::move(marker), std::move(specials));
}

void TokenizerModel::save(const std::string& path) const { write_file(path, to_text()); }

TokenizerModel TokenizerModel::load(const std::string& path) {
  return from_text(read_file(path));
}

DocumentSource vector_source(std::vector<std::string> docs) {
  auto shared = std::make_shared<std::vector<std::string>>(std::move(docs));
  auto index = std::make_shared<size_t>(0);
  return [shared, index]() -> std::optional<std::string> {
    if (*index >= shared->size()) return std::nullopt;
    return (*shared)[(*index)++];
  };
}

// ---------------------------------------------------------------------------
// Training

namespace {

using WordCounts = std::unordered_map<std::string, int64_t>;  // key: M|U + bytes

WordCounts count_shard(std::vector<std::string> docs, const NormalizerConfig& normalizer) {
  WordCounts counts;
  for (const std::string& doc : docs) {
    NormalizedDocument nd = normalize_document(doc, normalizer);
    if (nd.dropped) continue;
    for (const Segment& seg : split_segments(nd.text)) {
      if (!seg.marked && seg.bytes.empty()) continue;
      std::string key;
      key.reserve(seg.bytes.size() + 1);
      key.push_back(seg.marked ? 'M' : 'U');
      key += seg.bytes;
      counts[key] += 1;
    }
  }
  return counts;
}

struct TrainerWord {
  std::vector<int32_t> syms;
  int64_t count = 0;
};

struct HeapItem {
  int64_t count;
  int32_t left;
  int32_t right;
};

// Max-heap ordering: larger count first, then lexicographically smaller
// (left bytes, right bytes) first.
struct HeapCmp {
  const std::vector<TokenEntry>* entries;
  bool operator()(const HeapItem& a, const HeapItem& b) const {
    if (a.count != b.count) return a.count < b.count;
    const std::string& al = (*entries)[a.left].bytes;
    const std::string& bl = (*entries)[b.left].bytes;
    if (al != bl) return al > bl;
    return (*entries)[a.right].bytes > (*entries)[b.right].bytes;
  }
};

}  // namespace

TrainResult train_tokenizer(DocumentSource source, size_t target_vocab_size,
                            const NormalizerConfig& normalizer,
                            const TrainOptions& options) {
  normalizer.validate();

  unsigned threads = options.threads;
  if (threads == 0) {
    threads = std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
    threads = std::min(threads, 8u);
  }
  size_t shard_docs = std::max<size_t>(1, options.shard_docs);

  // Shard-parallel word counting with an order-independent (additive)
  // reduction, so shard size and thread count never change the result.
  WordCounts word_counts;
  uint64_t documents = 0;
  {
    std::vector<std::future<WordCounts>> pending;
    auto drain_to = [&](size_t keep) {
      while (pending.size() > keep) {
        WordCounts part = pending.front().get();
        pending.erase(pending.begin());
        for (auto& [k, v] : part) word_counts[k] += v;
      }
    };
    while (true) {
      std::vector<std::string> shard;
      shard.reserve(shard_docs);
      while (shard.size() < shard_docs) {
        std::optional<std::string> doc = source();
        if (!doc) break;
        shard.push_back(std::move(*doc));
      }
      if (shard.empty()) break;
      documents += shard.size();
      pending.push_back(std::async(std::launch::async, count_shard, std::move(shard),
                                   std::cref(normalizer)));
      drain_to(threads > 0 ? threads - 1 : 0);
    }
    drain_to(0);
  }

  if (documents == 0) raise(errc::empty_corpus, "no documents in corpus");
  if (word_counts.empty())
    raise(errc::empty_corpus, "no usable text after normalization");

  // Alphabet: every character that appears, except the marker character,
  // which is always byte-escaped.
  std::set<std::string> alphabet;
  for (const auto& [key, count] : word_counts) {
    std::string_view content = std::string_view(key).substr(1);
    size_t pos = 0;
    while (pos < content.size()) {
      size_t start = pos;
      char32_t cp = decode_utf8(content, pos);
      if (cp != kMarkerCp) alphabet.insert(std::string(content.substr(start, pos - start)));
    }
  }

  const std::vector<std::string>& specials = default_specials();
  size_t floor_size = specials.size() + 256 + 1 + alphabet.size();
  if (target_vocab_size < floor_size)
    raise(errc::target_too_small,
          "target " + std::to_string(target_vocab_size) + " below minimum " +
              std::to_string(floor_size) + " (specials + bytes + marker + alphabet)");

  std::vector<TokenEntry> entries;
  entries.reserve(target_vocab_size);
  for (const std::string& s : specials) entries.push_back({TokenKind::special, s});
  for (int b = 0; b < 256; ++b)
    entries.push_back({TokenKind::byte, std::string(1, static_cast<char>(b))});
  const int32_t marker_id = static_cast<int32_t>(entries.size());
  entries.push_back({TokenKind::marker, kWhitespaceMarker});

  std::unordered_map<std::string, int32_t> piece_ids;
  std::vector<bool> mergeable(entries.size(), false);
  mergeable[marker_id] = true;
  for (const std::string& ch : alphabet) {
    piece_ids.emplace(ch, static_cast<int32_t>(entries.size()));
    entries.push_back({TokenKind::piece, ch});
    mergeable.push_back(true);
  }

  // Deterministic word order (sorted keys) for reproducible ids.
  std::vector<TrainerWord> words;
  {
    std::vector<const std::pair<const std::string, int64_t>*> sorted;
    sorted.reserve(word_counts.size());
    for (const auto& kv : word_counts) sorted.push_back(&kv);
    std::sort(sorted.begin(), sorted.end(),
              [](auto* a, auto* b) { return a->first < b->first; });
    words.reserve(sorted.size());
    for (auto* kv : sorted) {
      TrainerWord w;
      w.count = kv->second;
      std::string_view key = kv->first;
      if (key[0] == 'M') w.syms.push_back(marker_id);
      std::string_view content = key.substr(1);
      size_t pos = 0;
      while (pos < content.size()) {
        size_t start = pos;
        char32_t cp = decode_utf8(content, pos);
        std::string_view char_bytes = content.substr(start, pos - start);
        if (cp == kMarkerCp) {
          for (unsigned char b : char_bytes)
            w.syms.push_back(static_cast<int32_t>(specials.size()) + b);
        } else {
          w.syms.push_back(piece_ids.at(std::string(char_bytes)));
        }
      }
      words.push_back(std::move(w));
    }
  }

  // Adjacent-pair counts over mergeable symbols only; byte-fallback
  // symbols never participate in merges.
  std::unordered_map<uint64_t, int64_t> pair_counts;
  std::unordered_map<uint64_t, std::vector<int32_t>> pair_words;
  auto for_each_pair = [&](const std::vector<int32_t>& syms, auto&& fn) {
    for (size_t i = 0; i + 1 < syms.size(); ++i)
      if (mergeable[syms[i]] && mergeable[syms[i + 1]]) fn(pack_pair(syms[i], syms[i + 1]));
  };
  for (size_t w = 0; w < words.size(); ++w) {
    for_each_pair(words[w].syms, [&](uint64_t key) {
      pair_counts[key] += words[w].count;
      pair_words[key].push_back(static_cast<int32_t>(w));
    });
  }

  HeapCmp cmp{&entries};
  std::priority_queue<HeapItem, std::vector<HeapItem>, HeapCmp> heap(cmp);
  for (const auto& [key, count] : pair_counts)
    heap.push({count, static_cast<int32_t>(key >> 32),
               static_cast<int32_t>(key & 0xFFFFFFFF)});

  std::vector<MergeRule> merges;
  bool saturated = false;

  while (entries.size() < target_vocab_size) {
    HeapItem best{0, -1, -1};
    bool found = false;
    while (!heap.empty()) {
      HeapItem item = heap.top();
      auto it = pair_counts.find(pack_pair(item.left, item.right));
      if (it == pair_counts.end() || it->second != item.count) {
        heap.pop();  // stale
        continue;
      }
      if (item.count >= 2) {
        best = item;
        found = true;
      }
      break;  // valid top below threshold means the maximum is below it
    }
    if (!found) {
      saturated = true;
      break;
    }

    const uint64_t best_key = pack_pair(best.left, best.right);
    std::string new_bytes = entries[best.left].bytes + entries[best.right].bytes;
    int32_t new_id;
    auto existing = piece_ids.find(new_bytes);
    if (existing != piece_ids.end()) {
      new_id = existing->second;  // same bytes reachable through two splits
    } else {
      new_id = static_cast<int32_t>(entries.size());
      entries.push_back({TokenKind::piece, new_bytes});
      mergeable.push_back(true);
      piece_ids.emplace(std::move(new_bytes), new_id);
    }
    merges.push_back({best.left, best.right, new_id});

    std::vector<int32_t> affected = std::move(pair_words[best_key]);
    std::unordered_map<uint64_t, int64_t> delta;
    std::unordered_map<uint64_t, std::vector<int32_t>> new_locations;
    for (int32_t w : affected) {
      TrainerWord& word = words[w];
      bool contains = false;
      for (size_t i = 0; i + 1 < word.syms.size(); ++i) {
        if (word.syms[i] == best.left && word.syms[i + 1] == best.right) {
          contains = true;
          break;
        }
      }
      if (!contains) continue;  // duplicate index entry or already rewritten

      for_each_pair(word.syms, [&](uint64_t key) { delta[key] -= word.count; });
      std::vector<int32_t> next;
      next.reserve(word.syms.size());
      for (size_t i = 0; i < word.syms.size();) {
        if (i + 1 < word.syms.size() && word.syms[i] == best.left &&
            word.syms[i + 1] == best.right) {
          next.push_back(new_id);
          i += 2;
        } else {
          next.push_back(word.syms[i]);
          ++i;
        }
      }
      word.syms = std::move(next);
      for_each_pair(word.syms, [&](uint64_t key) {
        delta[key] += word.count;
        new_locations[key].push_back(w);
      });
    }

    for (const auto& [key, d] : delta) {
      if (d == 0) continue;
      int64_t next_count = pair_counts[key] + d;
      if (next_count <= 0) {
        pair_counts.erase(key);
        pair_words.erase(key);
      } else {
        pair_counts[key] = next_count;
        heap.push({next_count, static_cast<int32_t>(key >> 32),
                   static_cast<int32_t>(key & 0xFFFFFFFF)});
      }
    }
    for (auto& [key, locs] : new_locations) {
      if (!pair_counts.count(key)) continue;
      auto& vec = pair_words[key];
      vec.insert(vec.end(), locs.begin(), locs.end());
    }
  }

  TrainResult result{
      TokenizerModel::from_parts(std::move(entries), std::move(merges), normalizer,
                                 true, kWhitespaceMarker, specials),
      saturated, 0};
  result.merges_learned = result.model.merges().size();
  return result;
}

CorpusStats corpus_stats(const TokenizerModel& model, DocumentSource source) {
  CorpusStats stats;
  while (true) {
    std::optional<std::string> doc = source();
    if (!doc) break;
    ++stats.documents;
    stats.byte_count += doc->size();
    stats.token_count += model.encode(*doc).size();
    bool in_word = false;
    for (unsigned char c : *doc) {
      if (is_ws_byte(c)) {
        in_word = false;
      } else if (!in_word) {
        in_word = true;
        ++stats.word_count;
      }
    }
  }
  if (stats.word_count > 0)
    stats.fertility = static_cast<double>(stats.token_count) /
                      static_cast<double>(stats.word_count);
  if (stats.token_count > 0)
    stats.bytes_per_token = static_cast<double>(stats.byte_count) /
                            static_cast<double>(stats.token_count);
  return stats;
}

}  // namespace parskit
