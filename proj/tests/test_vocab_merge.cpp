#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "parskit/bpe.hpp"
#include "parskit/error.hpp"
#include "parskit/vocab_merge.hpp"

using namespace parskit;

namespace {

// Bare piece-table models: no specials, no byte tokens, no marker entry.
// merge_vocab only rewrites the tables, so these keep the id arithmetic
// readable.
TokenizerModel bare(const std::vector<std::string>& pieces,
                    const std::vector<std::pair<std::string, std::string>>& merges = {},
                    const std::string& marker = kWhitespaceMarker) {
  std::vector<TokenEntry> entries;
  for (const std::string& p : pieces) entries.push_back({TokenKind::piece, p});
  auto id_of = [&](const std::string& s) {
    for (size_t i = 0; i < entries.size(); ++i)
      if (entries[i].bytes == s) return static_cast<int32_t>(i);
    REQUIRE_MESSAGE(false, "piece not in table: " << s);
    return int32_t{-1};
  };
  std::vector<MergeRule> rules;
  for (const auto& [l, r] : merges) rules.push_back({id_of(l), id_of(r), id_of(l + r)});
  return TokenizerModel::from_parts(std::move(entries), std::move(rules),
                                    NormalizerConfig::identity(), false, marker, {});
}

TokenizerModel train(std::vector<std::string> docs, size_t target) {
  // Duplicate every document so each pair clears the frequency-2 floor.
  std::vector<std::string> twice = docs;
  twice.insert(twice.end(), docs.begin(), docs.end());
  return train_tokenizer(vector_source(std::move(twice)), target,
                         NormalizerConfig::default_v1())
      .model;
}

errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  REQUIRE_MESSAGE(false, "expected an Error");
  return errc::io_error;
}

}  // namespace

TEST_CASE("appended tokens get the next free ids") {
  TokenizerModel base = bare({"w", "x", "y", "z"});
  TokenizerModel aux = bare({"p", "x", "q"});
  MergeVocabStats st;
  std::vector<MergeRecord> recs;
  TokenizerModel merged = merge_vocab(base, aux, &st, &recs);

  CHECK(merged.vocab_size() == 6);
  CHECK(st.base_size == 4);
  CHECK(st.aux_size == 3);
  CHECK(st.overlap == 1);
  CHECK(st.merged_size == 6);

  REQUIRE(recs.size() == 3);
  CHECK(recs[0].token == "p");
  CHECK(recs[0].aux_id == 0);
  CHECK(recs[0].merged_id == 4);
  CHECK_FALSE(recs[0].overlap);
  CHECK(recs[1].token == "x");
  CHECK(recs[1].merged_id == 1);
  CHECK(recs[1].overlap);
  CHECK(recs[2].token == "q");
  CHECK(recs[2].merged_id == 5);
  CHECK_FALSE(recs[2].overlap);

  CHECK(merged.entries()[4].bytes == "p");
  CHECK(merged.entries()[5].bytes == "q");
  CHECK(merged.piece_id("x") == 1);
  CHECK(verify_base_compat(base, merged).compatible());
}

TEST_CASE("merged size is base plus aux minus overlap") {
  std::mt19937 rng(77);
  for (int iter = 0; iter < 200; ++iter) {
    CAPTURE(iter);
    auto pick = [&](size_t n) {
      std::set<std::string> s;
      while (s.size() < n) {
        std::string p(1, static_cast<char>('a' + rng() % 12));
        if (rng() % 2) p += static_cast<char>('a' + rng() % 12);
        s.insert(p);
      }
      return std::vector<std::string>(s.begin(), s.end());
    };
    std::vector<std::string> bp = pick(1 + rng() % 10);
    std::vector<std::string> ap = pick(1 + rng() % 10);
    std::set<std::string> bs(bp.begin(), bp.end());
    size_t overlap = static_cast<size_t>(
        std::count_if(ap.begin(), ap.end(), [&](const std::string& p) { return bs.count(p) > 0; }));

    MergeVocabStats st;
    TokenizerModel merged = merge_vocab(bare(bp), bare(ap), &st);
    CHECK(st.overlap == overlap);
    CHECK(merged.vocab_size() == bp.size() + ap.size() - overlap);
    CHECK(st.merged_size == merged.vocab_size());
    CHECK(verify_base_compat(bare(bp), merged).compatible());
  }
}

TEST_CASE("base ids survive grafting a second language") {
  TokenizerModel base = train({"سلام دنیا", "کتاب خوب است", "دنیای بزرگ",
                               "سلام کتاب من", "زبان و متن"},
                              300);
  TokenizerModel aux = train({"hello world", "a good book", "the world is big",
                              "hello old book", "text and words"},
                             295);

  MergeVocabStats st;
  std::vector<MergeRecord> recs;
  TokenizerModel merged = merge_vocab(base, aux, &st, &recs);

  CHECK(verify_base_compat(base, merged).compatible());
  for (size_t i = 0; i < base.vocab_size(); ++i)
    CHECK(merged.entries()[i] == base.entries()[i]);

  // Specials, the byte table and the marker exist in both models, so the
  // structural overlap is at least 4 + 256 + 1.
  CHECK(st.overlap >= 261);
  CHECK(st.merged_size == st.base_size + st.aux_size - st.overlap);
  CHECK(st.merged_size == merged.vocab_size());

  REQUIRE(recs.size() == aux.vocab_size());
  for (size_t i = 0; i < recs.size(); ++i)
    CHECK(recs[i].aux_id == static_cast<int32_t>(i));

  // Base merges keep their ranks; surviving aux merges are appended.
  REQUIRE(merged.merges().size() == base.merges().size() + st.aux_merges_kept);
  CHECK(st.aux_merges_kept + st.aux_merges_dropped == aux.merges().size());
  for (size_t i = 0; i < base.merges().size(); ++i) {
    CHECK(merged.merges()[i].left_id == base.merges()[i].left_id);
    CHECK(merged.merges()[i].right_id == base.merges()[i].right_id);
    CHECK(merged.merges()[i].new_id == base.merges()[i].new_id);
  }

  for (const char* text : {"سلام دنیای بزرگ", "hello big world", "کتاب the کتاب"}) {
    CAPTURE(text);
    std::vector<int32_t> ids = merged.encode(text);
    CHECK(merged.decode(ids) == text);
  }

  // Grafted pieces make the merged model at least as dense on aux text.
  std::string aux_text = "hello world book";
  CHECK(merged.encode(aux_text).size() <= base.encode(aux_text).size());
}

TEST_CASE("merging a model with itself changes nothing") {
  TokenizerModel m = train({"سلام دنیا", "متن کوتاه", "دنیا و متن"}, 285);
  MergeVocabStats st;
  TokenizerModel merged = merge_vocab(m, m, &st);
  CHECK(merged.to_text() == m.to_text());
  CHECK(st.overlap == m.vocab_size());
  CHECK(st.merged_size == m.vocab_size());
  CHECK(st.aux_merges_kept == 0);
  CHECK(st.aux_merges_dropped == m.merges().size());
}

TEST_CASE("aux merge rules are retargeted and deduplicated") {
  TokenizerModel base = bare({"a", "b", "ab"}, {{"a", "b"}});
  TokenizerModel aux = bare({"b", "c", "bc", "a", "ab"}, {{"b", "c"}, {"a", "b"}});
  MergeVocabStats st;
  TokenizerModel merged = merge_vocab(base, aux, &st);

  CHECK(merged.vocab_size() == 5);
  CHECK(st.overlap == 3);
  CHECK(st.aux_merges_kept == 1);    // (b, c) is new
  CHECK(st.aux_merges_dropped == 1);  // (a, b) duplicates the base rule

  REQUIRE(merged.merges().size() == 2);
  CHECK(merged.merges()[0].left_id == 0);
  CHECK(merged.merges()[0].right_id == 1);
  CHECK(merged.merges()[0].new_id == 2);
  CHECK(merged.merges()[1].left_id == *merged.piece_id("b"));
  CHECK(merged.merges()[1].right_id == *merged.piece_id("c"));
  CHECK(merged.merges()[1].new_id == *merged.piece_id("bc"));
}

TEST_CASE("mismatched table conventions are rejected") {
  TokenizerModel plain = bare({"a"});

  // Different special token lists.
  TokenizerModel with_unk = TokenizerModel::from_parts(
      {{TokenKind::special, "<unk>"}, {TokenKind::piece, "a"}}, {},
      NormalizerConfig::identity(), false, kWhitespaceMarker, {"<unk>"});
  CHECK(code_of([&] { merge_vocab(plain, with_unk); }) == errc::incompatible_specials);

  // Different whitespace markers.
  TokenizerModel other_marker = bare({"a"}, {}, "_");
  CHECK(code_of([&] { merge_vocab(plain, other_marker); }) == errc::incompatible_specials);

  // Different byte fallback flags: rebuild a trained model with the flag off.
  TokenizerModel trained = train({"سلام دنیا", "دنیا بزرگ"}, 280);
  TokenizerModel no_fallback = TokenizerModel::from_parts(
      trained.entries(), trained.merges(), trained.normalizer(), false,
      trained.whitespace_marker(), trained.specials());
  CHECK(code_of([&] { merge_vocab(trained, no_fallback); }) ==
        errc::incompatible_specials);
}

TEST_CASE("base compatibility report pinpoints drift") {
  TokenizerModel base = bare({"p", "q", "r"});

  CHECK(verify_base_compat(base, base).compatible());

  BaseCompatReport swapped = verify_base_compat(base, bare({"p", "r", "q"}));
  REQUIRE(swapped.changed.size() == 2);
  CHECK(swapped.changed[0].base_id == 1);
  CHECK(swapped.changed[0].token == "q");
  CHECK(swapped.changed[0].kind == TokenKind::piece);
  CHECK(swapped.changed[0].merged_id == 2);
  CHECK(swapped.changed[1].base_id == 2);
  CHECK(swapped.changed[1].token == "r");
  CHECK(swapped.changed[1].merged_id == 1);

  BaseCompatReport missing = verify_base_compat(base, bare({"p", "q"}));
  REQUIRE(missing.changed.size() == 1);
  CHECK(missing.changed[0].base_id == 2);
  CHECK(missing.changed[0].token == "r");
  CHECK_FALSE(missing.changed[0].merged_id.has_value());
}

TEST_CASE("embedding resize plans") {
  EmbeddingResizePlan p = embedding_resize_plan(32000, 64000, 5120);
  CHECK(p.rows_to_add == 32000);
  CHECK(p.added_params == 327'680'000);
  CHECK(p.init_rule == "mean of existing rows");

  EmbeddingResizePlan same = embedding_resize_plan(7, 7, 999);
  CHECK(same.rows_to_add == 0);
  CHECK(same.added_params == 0);

  CHECK(embedding_resize_plan(4, 6, 3).added_params == 12);

  CHECK(code_of([] { embedding_resize_plan(6, 4, 3); }) == errc::shrink_not_supported);
  CHECK(code_of([] { embedding_resize_plan(0, 4, 3); }) == errc::invalid_range);
  CHECK(code_of([] { embedding_resize_plan(4, 6, 0); }) == errc::invalid_range);
  CHECK(code_of([] { embedding_resize_plan(4, -6, 3); }) == errc::invalid_range);
}
