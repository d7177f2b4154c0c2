#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "parskit/normalize.hpp"

namespace parskit {

// Byte-fallback BPE tokenizer.
//
// Vocabulary layout for trained models:
//   [0..3]        specials  <unk> <s> </s> <pad>
//   [4..259]      the 256 single-byte fallback tokens
//   [260]         the whitespace marker
//   [261..]       single-character alphabet pieces, then merged pieces in
//                 merge order
//
// Pretokenization splits text on the space character only.  Every space
// turns into the marker glued onto the following segment, so decode is the
// exact inverse of encode: no token sequence information is thrown away.
// A literal U+2581 in the input is always encoded through byte fallback,
// never as the marker, which keeps the two meanings apart.

enum class TokenKind : uint8_t { special, byte, marker, piece };

const char* token_kind_name(TokenKind k);
TokenKind token_kind_from_name(std::string_view name);  // throws invalid_record

struct TokenEntry {
  TokenKind kind;
  std::string bytes;  // payload; for kind byte this is the single raw byte

  bool operator==(const TokenEntry&) const = default;
};

struct MergeRule {
  int32_t left_id;
  int32_t right_id;
  int32_t new_id;  // entry whose bytes equal left.bytes + right.bytes
};

inline constexpr const char* kWhitespaceMarker = "\xE2\x96\x81";  // U+2581

inline const std::vector<std::string>& default_specials() {
  static const std::vector<std::string> s = {"<unk>", "<s>", "</s>", "<pad>"};
  return s;
}

struct Segment {
  bool marked;        // preceded by a space in the source text
  std::string bytes;  // segment content, may be empty for runs of spaces
};

// Shared by train and encode; exposed so tests can build oracles on the
// same word boundaries.
std::vector<Segment> split_segments(std::string_view text);

class TokenizerModel {
 public:
  // Validates everything: contiguous ids (implied by the vector), token
  // uniqueness per kind, byte-token completeness when byte_fallback is on,
  // merge references and merge output bytes.  Throws invalid_record /
  // duplicate_id_corruption on violations.
  static TokenizerModel from_parts(std::vector<TokenEntry> entries,
                                   std::vector<MergeRule> merges,
                                   NormalizerConfig normalizer,
                                   bool byte_fallback,
                                   std::string whitespace_marker,
                                   std::vector<std::string> specials);

  static TokenizerModel load(const std::string& path);
  void save(const std::string& path) const;
  std::string to_text() const;
  static TokenizerModel from_text(std::string_view text);

  size_t vocab_size() const { return entries_.size(); }
  const std::vector<TokenEntry>& entries() const { return entries_; }
  const std::vector<MergeRule>& merges() const { return merges_; }
  const NormalizerConfig& normalizer() const { return normalizer_; }
  bool byte_fallback() const { return byte_fallback_; }
  const std::string& whitespace_marker() const { return whitespace_marker_; }
  const std::vector<std::string>& specials() const { return specials_; }

  std::optional<int32_t> piece_id(std::string_view piece_bytes) const;
  std::optional<int32_t> byte_id(unsigned char b) const;
  std::optional<int32_t> marker_id() const;

  // Deterministic; never emits the unk id when byte fallback is on.
  // Throws errc::invalid_encoding on malformed UTF-8.
  std::vector<int32_t> encode(std::string_view text) const;

  // Display form of one token (marker and marker-prefixed pieces keep the
  // visible U+2581).  Throws errc::unknown_id for out-of-range ids.
  std::string piece_display(int32_t id) const;

  // Exact inverse of encode.  Specials decode to the empty string.
  std::string decode(std::span<const int32_t> ids) const;

 private:
  TokenizerModel() = default;
  void build_indexes();
  void validate() const;
  std::string decode_one(int32_t id) const;

  std::vector<TokenEntry> entries_;
  std::vector<MergeRule> merges_;
  NormalizerConfig normalizer_;
  bool byte_fallback_ = true;
  std::string whitespace_marker_ = kWhitespaceMarker;
  std::vector<std::string> specials_;

  std::unordered_map<std::string, int32_t> piece_ids_;
  std::unordered_map<uint64_t, std::pair<int32_t, int32_t>> merge_ranks_;
  std::array<int32_t, 256> byte_ids_{};
  int32_t marker_id_ = -1;
  mutable std::unordered_map<std::string, std::vector<int32_t>> encode_cache_;
};

// Pull-based document stream; returns nullopt at end of corpus.
using DocumentSource = std::function<std::optional<std::string>()>;

DocumentSource vector_source(std::vector<std::string> docs);

struct TrainOptions {
  size_t shard_docs = 4096;  // documents per counting shard
  unsigned threads = 0;      // 0 = hardware concurrency, capped at 8
};

struct TrainResult {
  TokenizerModel model;
  bool saturated = false;   // stopped early: no pair left with frequency >= 2
  size_t merges_learned = 0;
};

// Normalizes every document with `normalizer` (dropped documents are
// skipped), counts words shard by shard, then learns merges greedily:
// highest pair frequency first, ties broken by lexicographically smallest
// (left bytes, right bytes).  Deterministic for any shard size and thread
// count.  Throws empty_corpus / target_too_small.
TrainResult train_tokenizer(DocumentSource source, size_t target_vocab_size,
                            const NormalizerConfig& normalizer,
                            const TrainOptions& options = {});

struct CorpusStats {
  uint64_t documents = 0;
  uint64_t token_count = 0;  // sum of encode lengths
  uint64_t word_count = 0;   // maximal whitespace-free runs
  uint64_t byte_count = 0;
  std::optional<double> fertility;        // tokens per word
  std::optional<double> bytes_per_token;
};

// Streams the corpus; an empty corpus yields all-zero counts with the
// ratios absent.
CorpusStats corpus_stats(const TokenizerModel& model, DocumentSource source);

}  // namespace parskit
