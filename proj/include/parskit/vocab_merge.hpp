#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parskit/bpe.hpp"

namespace parskit {

// Vocabulary extension: graft an auxiliary tokenizer onto a base tokenizer
// without disturbing any base id, so existing checkpoints keep working.

struct MergeRecord {
  std::string token;   // escaped payload bytes
  TokenKind kind;
  int32_t aux_id;
  int32_t merged_id;
  bool overlap;        // token already existed in the base vocabulary
};

struct MergeVocabStats {
  size_t base_size = 0;
  size_t aux_size = 0;
  size_t overlap = 0;       // aux tokens already present in base
  size_t merged_size = 0;   // base_size + aux_size - overlap
  size_t aux_merges_kept = 0;
  size_t aux_merges_dropped = 0;  // duplicates of base merge rules
};

// Base ids are preserved; new aux tokens are appended in aux id order
// starting at |base|.  Base merge ranks are kept and surviving aux merges
// are re-ranked densely after them.  Requires identical specials, byte
// fallback flag and whitespace marker (errc::incompatible_specials).
// A post-merge consistency sweep raises errc::duplicate_id_corruption if
// the result would contain duplicate tokens or a broken merge table.
TokenizerModel merge_vocab(const TokenizerModel& base, const TokenizerModel& aux,
                           MergeVocabStats* stats = nullptr,
                           std::vector<MergeRecord>* records = nullptr);

struct BaseCompatIssue {
  int32_t base_id;
  std::string token;  // escaped payload bytes
  TokenKind kind;
  std::optional<int32_t> merged_id;  // empty when the token vanished
};

struct BaseCompatReport {
  std::vector<BaseCompatIssue> changed;
  bool compatible() const { return changed.empty(); }
};

// Flags every base token whose id changed or that is missing in `merged`.
// An empty report means every base token resolves to the same id in both
// models' lookup tables.
BaseCompatReport verify_base_compat(const TokenizerModel& base,
                                    const TokenizerModel& merged);

struct EmbeddingResizePlan {
  int64_t rows_to_add = 0;
  int64_t added_params = 0;  // 2 * rows_to_add * hidden (embedding + head)
  std::string init_rule;     // "mean of existing rows"
};

// Throws errc::shrink_not_supported when new_size < old_size and
// errc::invalid_range on non-positive sizes.
EmbeddingResizePlan embedding_resize_plan(int64_t old_size, int64_t new_size,
                                          int64_t hidden);

}  // namespace parskit
