#include "parskit/vocab_merge.hpp"

#include <map>
#include <unordered_set>

#include "parskit/error.hpp"
#include "parskit/util.hpp"

namespace parskit {

namespace {

uint64_t pack_pair(int32_t l, int32_t r) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(l)) << 32) |
         static_cast<uint32_t>(r);
}

using EntryIndex = std::map<std::pair<TokenKind, std::string>, int32_t>;

EntryIndex index_entries(const TokenizerModel& model) {
  EntryIndex index;
  const auto& entries = model.entries();
  for (size_t i = 0; i < entries.size(); ++i)
    index[{entries[i].kind, entries[i].bytes}] = static_cast<int32_t>(i);
  return index;
}

}  // namespace

TokenizerModel merge_vocab(const TokenizerModel& base, const TokenizerModel& aux,
                           MergeVocabStats* stats,
                           std::vector<MergeRecord>* records) {
  if (base.specials() != aux.specials())
    raise(errc::incompatible_specials, "special token sets differ");
  if (base.byte_fallback() != aux.byte_fallback())
    raise(errc::incompatible_specials, "byte fallback flags differ");
  if (base.whitespace_marker() != aux.whitespace_marker())
    raise(errc::incompatible_specials, "whitespace markers differ");

  std::vector<TokenEntry> entries = base.entries();
  EntryIndex index = index_entries(base);

  size_t overlap = 0;
  std::vector<int32_t> aux_to_merged(aux.vocab_size(), -1);
  for (size_t i = 0; i < aux.vocab_size(); ++i) {
    const TokenEntry& e = aux.entries()[i];
    auto it = index.find({e.kind, e.bytes});
    int32_t merged_id;
    bool was_overlap;
    if (it != index.end()) {
      merged_id = it->second;
      was_overlap = true;
      ++overlap;
    } else {
      merged_id = static_cast<int32_t>(entries.size());
      entries.push_back(e);
      index[{e.kind, e.bytes}] = merged_id;
      was_overlap = false;
    }
    aux_to_merged[i] = merged_id;
    if (records)
      records->push_back({escape_bytes(e.bytes), e.kind, static_cast<int32_t>(i),
                          merged_id, was_overlap});
  }

  // Base merges keep their ranks; surviving aux merges follow, re-ranked
  // densely in aux rank order.  Aux rules are retargeted through the id
  // map, and rules that duplicate an existing (left, right) pair are
  // dropped so merging a model with itself is the identity.
  std::vector<MergeRule> merges = base.merges();
  std::unordered_set<uint64_t> seen_pairs;
  for (const MergeRule& r : merges) seen_pairs.insert(pack_pair(r.left_id, r.right_id));

  size_t kept = 0, dropped = 0;
  for (const MergeRule& r : aux.merges()) {
    int32_t l = aux_to_merged[r.left_id];
    int32_t rr = aux_to_merged[r.right_id];
    int32_t n = aux_to_merged[r.new_id];
    if (l < 0 || rr < 0 || n < 0) {  // constituent missing from the merged vocab
      ++dropped;
      continue;
    }
    if (!seen_pairs.insert(pack_pair(l, rr)).second) {
      ++dropped;
      continue;
    }
    merges.push_back({l, rr, n});
    ++kept;
  }

  size_t expected = base.vocab_size() + aux.vocab_size() - overlap;
  if (entries.size() != expected)
    raise(errc::duplicate_id_corruption,
          "merged size " + std::to_string(entries.size()) + " != base + aux - overlap = " +
              std::to_string(expected));

  TokenizerModel merged = TokenizerModel::from_parts(
      std::move(entries), std::move(merges), base.normalizer(), base.byte_fallback(),
      base.whitespace_marker(), base.specials());

  if (stats) {
    stats->base_size = base.vocab_size();
    stats->aux_size = aux.vocab_size();
    stats->overlap = overlap;
    stats->merged_size = merged.vocab_size();
    stats->aux_merges_kept = kept;
    stats->aux_merges_dropped = dropped;
  }
  return merged;
}

BaseCompatReport verify_base_compat(const TokenizerModel& base,
                                    const TokenizerModel& merged) {
  EntryIndex index = index_entries(merged);
  BaseCompatReport report;
  const auto& entries = base.entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    const TokenEntry& e = entries[i];
    auto it = index.find({e.kind, e.bytes});
    if (it == index.end()) {
      report.changed.push_back({static_cast<int32_t>(i), escape_bytes(e.bytes),
                                e.kind, std::nullopt});
    } else if (it->second != static_cast<int32_t>(i)) {
      report.changed.push_back({static_cast<int32_t>(i), escape_bytes(e.bytes),
                                e.kind, it->second});
    }
  }
  return report;
}

EmbeddingResizePlan embedding_resize_plan(int64_t old_size, int64_t new_size,
                                          int64_t hidden) {
  if (old_size <= 0 || new_size <= 0 || hidden <= 0)
    raise(errc::invalid_range, "sizes must be positive");
  if (new_size < old_size)
    raise(errc::shrink_not_supported,
          "new vocabulary " + std::to_string(new_size) + " is smaller than old " +
              std::to_string(old_size));
  EmbeddingResizePlan plan;
  plan.rows_to_add = new_size - old_size;
  plan.added_params = 2 * plan.rows_to_add * hidden;
  plan.init_rule = "mean of existing rows";
  return plan;
}

}  // namespace parskit
