#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "parskit/error.hpp"
#include "parskit/metrics.hpp"
#include "parskit/normalize.hpp"

using namespace parskit;

namespace {

std::vector<LabeledPair> pairs_of(const std::vector<std::string>& golds,
                                  const std::vector<std::string>& preds) {
  REQUIRE(golds.size() == preds.size());
  std::vector<LabeledPair> out;
  for (size_t i = 0; i < golds.size(); ++i)
    out.push_back({std::to_string(i), preds[i], golds[i]});
  return out;
}

// Straight confusion-matrix recount, written without reference to the
// library's bookkeeping.
struct ConfusionOracle {
  std::map<std::string, double> per_class_f1;
  double macro = 0.0;
  double weighted = 0.0;
};

ConfusionOracle confusion_oracle(const std::vector<LabeledPair>& pairs) {
  std::set<std::string> labels;
  for (const LabeledPair& p : pairs) {
    labels.insert(p.gold);
    labels.insert(p.prediction);
  }
  ConfusionOracle o;
  double weighted_sum = 0.0;
  int64_t total_support = 0;
  for (const std::string& label : labels) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (const LabeledPair& p : pairs) {
      bool is_pred = p.prediction == label;
      bool is_gold = p.gold == label;
      if (is_pred && is_gold) ++tp;
      if (is_pred && !is_gold) ++fp;
      if (!is_pred && is_gold) ++fn;
    }
    double prec = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
    double rec = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
    double f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    o.per_class_f1[label] = f1;
    o.macro += f1;
    weighted_sum += f1 * double(tp + fn);
    total_support += tp + fn;
  }
  o.macro /= double(labels.size());
  o.weighted = weighted_sum / double(total_support);
  return o;
}

// Full pairwise similarity table, floored at zero, maximised row by row.
double pairwise_max_side(const std::vector<std::vector<double>>& from,
                         const std::vector<std::vector<double>>& to) {
  double sum = 0.0;
  for (const auto& u : from) {
    double best = 0.0;
    for (const auto& v : to) {
      double dot = 0.0, nu = 0.0, nv = 0.0;
      for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
      }
      double cos = nu > 0.0 && nv > 0.0 ? dot / (std::sqrt(nu) * std::sqrt(nv)) : 0.0;
      best = std::max(best, std::max(0.0, cos));
    }
    sum += best;
  }
  return sum / double(from.size());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
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

TEST_CASE("binary f1 from a hand confusion matrix") {
  std::vector<LabeledPair> pairs = pairs_of({"1", "1", "0", "0"}, {"1", "0", "0", "0"});
  F1Breakdown b = f1_breakdown(pairs);

  REQUIRE(b.classes.size() == 2);
  CHECK(b.classes[0].label == "0");
  CHECK(b.classes[1].label == "1");

  // Positive class: one hit, one miss, no false alarm.
  CHECK(b.classes[1].precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.classes[1].recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(b.classes[1].f1 - 2.0 / 3.0) <= 1e-12);
  CHECK(b.classes[1].support == 2);

  CHECK(b.classes[0].precision == doctest::Approx(2.0 / 3.0));
  CHECK(b.classes[0].recall == doctest::Approx(1.0));
  CHECK(b.classes[0].f1 == doctest::Approx(0.8));

  CHECK(b.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));
  CHECK(b.weighted_f1 == doctest::Approx((2.0 / 3.0 * 2 + 0.8 * 2) / 4.0));
  CHECK(b.support == 4);

  CHECK(f1_score(pairs, Averaging::macro) == doctest::Approx(b.macro_f1));
  CHECK(f1_score(pairs, Averaging::weighted) == doctest::Approx(b.weighted_f1));

  CHECK(f1_score(pairs_of({"a", "b"}, {"a", "b"}), Averaging::macro) == 1.0);
}

TEST_CASE("degenerate predictions") {
  // Every prediction lands on one class; the other gets zero everywhere.
  std::vector<LabeledPair> pairs =
      pairs_of({"a", "a", "b", "b"}, {"b", "b", "b", "b"});
  ConfusionOracle o = confusion_oracle(pairs);
  F1Breakdown b = f1_breakdown(pairs);
  CHECK(b.classes[0].f1 == 0.0);  // class a never predicted
  CHECK(b.macro_f1 == doctest::Approx(o.macro));
  CHECK(b.weighted_f1 == doctest::Approx(o.weighted));

  // A label that only occurs as a prediction still shows up, with support 0.
  std::vector<LabeledPair> stray = pairs_of({"x", "x"}, {"x", "y"});
  F1Breakdown sb = f1_breakdown(stray);
  REQUIRE(sb.classes.size() == 2);
  CHECK(sb.classes[1].label == "y");
  CHECK(sb.classes[1].support == 0);
  CHECK(sb.classes[1].f1 == 0.0);
}

TEST_CASE("f1 matches the confusion-matrix oracle on random labels") {
  std::mt19937 rng(1312);
  for (int iter = 0; iter < 300; ++iter) {
    CAPTURE(iter);
    size_t n = 1 + rng() % 100;
    int n_labels = 1 + int(rng() % 6);
    std::vector<std::string> golds, preds;
    for (size_t i = 0; i < n; ++i) {
      golds.push_back(std::string(1, char('a' + rng() % n_labels)));
      preds.push_back(std::string(1, char('a' + rng() % n_labels)));
    }
    std::vector<LabeledPair> pairs = pairs_of(golds, preds);
    ConfusionOracle o = confusion_oracle(pairs);
    F1Breakdown b = f1_breakdown(pairs);

    CHECK(std::abs(b.macro_f1 - o.macro) <= 1e-12);
    CHECK(std::abs(b.weighted_f1 - o.weighted) <= 1e-12);
    REQUIRE(b.classes.size() == o.per_class_f1.size());
    size_t i = 0;
    for (const auto& [label, f1] : o.per_class_f1) {
      CHECK(b.classes[i].label == label);  // sorted by label
      CHECK(std::abs(b.classes[i].f1 - f1) <= 1e-12);
      CHECK(b.classes[i].f1 >= 0.0);
      CHECK(b.classes[i].f1 <= 1.0);
      ++i;
    }
  }
}

TEST_CASE("f1 input validation") {
  CHECK(code_of([] { f1_breakdown({}); }) == errc::empty_input);
  std::vector<LabeledPair> bad = {{"0", "a", ""}};
  CHECK(code_of([&] { f1_breakdown(bad); }) == errc::invalid_record);
}

TEST_CASE("containment accuracy tolerates explanations") {
  NormalizerConfig cfg = NormalizerConfig::default_v1();
  std::vector<LabeledPair> pairs = {
      {"0", "پایتخت ایران تهران است", "تهران"},   // answer embedded in a sentence
      {"1", "اصفهان", "اصفهان"},                   // exact match
      {"2", "نمیدانم", "شیراز"},                    // wrong
  };
  CHECK(containment_accuracy(pairs, cfg) == doctest::Approx(2.0 / 3.0));

  // Normalization bridges Arabic vs Persian letter forms.
  std::vector<LabeledPair> forms = {{"0", "كتاب خوب", "کتاب"}};
  CHECK(containment_accuracy(forms, cfg) == 1.0);
  CHECK(containment_accuracy(forms, NormalizerConfig::identity()) == 0.0);

  CHECK(code_of([&] { containment_accuracy({}, cfg); }) == errc::empty_input);
}

TEST_CASE("greedy semantic f1 on hand-checked tables") {
  EmbeddedSequence ref{{{1, 0}}};
  EmbeddedSequence cand{{{1, 0}, {0, 1}}};
  SemanticScore s = greedy_semantic_f1(cand, ref);
  CHECK(s.precision == doctest::Approx(0.5));
  CHECK(s.recall == doctest::Approx(1.0));
  CHECK(std::abs(s.f1 - 2.0 / 3.0) <= 1e-12);

  // Swapping the arguments swaps precision and recall, keeps f1.
  SemanticScore t = greedy_semantic_f1(ref, cand);
  CHECK(t.precision == doctest::Approx(s.recall));
  CHECK(t.recall == doctest::Approx(s.precision));
  CHECK(t.f1 == doctest::Approx(s.f1));

  EmbeddedSequence same{{{0.6, 0.8}, {1, 0}}};
  SemanticScore id = greedy_semantic_f1(same, same);
  CHECK(id.precision == doctest::Approx(1.0));
  CHECK(id.recall == doctest::Approx(1.0));
  CHECK(id.f1 == doctest::Approx(1.0));

  // Orthogonal vectors share nothing; f1 degrades to 0 rather than NaN.
  SemanticScore zero = greedy_semantic_f1(EmbeddedSequence{{{1, 0}}},
                                          EmbeddedSequence{{{0, 1}}});
  CHECK(zero.precision == 0.0);
  CHECK(zero.recall == 0.0);
  CHECK(zero.f1 == 0.0);

  // Opposite vectors are floored at zero, not scored negatively.
  SemanticScore opp = greedy_semantic_f1(EmbeddedSequence{{{1, 0}}},
                                         EmbeddedSequence{{{-1, 0}}});
  CHECK(opp.precision == 0.0);
  CHECK(opp.f1 == 0.0);

  // A zero vector matches nothing but does not poison the mean.
  SemanticScore z = greedy_semantic_f1(EmbeddedSequence{{{0, 0}, {1, 0}}},
                                       EmbeddedSequence{{{1, 0}}});
  CHECK(z.precision == doctest::Approx(0.5));
}

TEST_CASE("greedy semantic f1 validation") {
  EmbeddedSequence a{{{1, 0}}};
  EmbeddedSequence empty{};
  EmbeddedSequence wrong{{{1, 0, 0}}};
  EmbeddedSequence ragged{{{1, 0}, {1}}};
  CHECK(code_of([&] { greedy_semantic_f1(a, empty); }) == errc::empty_sequence);
  CHECK(code_of([&] { greedy_semantic_f1(empty, a); }) == errc::empty_sequence);
  CHECK(code_of([&] { greedy_semantic_f1(a, wrong); }) == errc::dimension_mismatch);
  CHECK(code_of([&] { greedy_semantic_f1(ragged, a); }) == errc::dimension_mismatch);
}

TEST_CASE("greedy matching equals the full pairwise-max oracle") {
  std::mt19937 rng(2718);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int iter = 0; iter < 500; ++iter) {
    CAPTURE(iter);
    size_t n = 1 + rng() % 16, m = 1 + rng() % 16, d = 1 + rng() % 8;
    auto gen = [&](size_t count) {
      std::vector<std::vector<double>> vs(count, std::vector<double>(d));
      for (auto& v : vs)
        for (double& x : v) x = dist(rng);
      if (rng() % 8 == 0) std::fill(vs[0].begin(), vs[0].end(), 0.0);
      return vs;
    };
    EmbeddedSequence cand{gen(n)}, ref{gen(m)};

    SemanticScore s = greedy_semantic_f1(cand, ref);
    double p = pairwise_max_side(cand.vectors, ref.vectors);
    double r = pairwise_max_side(ref.vectors, cand.vectors);
    double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;

    CHECK(std::abs(s.precision - p) <= 1e-12);
    CHECK(std::abs(s.recall - r) <= 1e-12);
    CHECK(std::abs(s.f1 - f1) <= 1e-12);
    CHECK(s.f1 >= 0.0);
    CHECK(s.f1 <= 1.0);
  }
}

TEST_CASE("judge prompt matches the frozen layout") {
  std::vector<std::pair<std::string, std::string>> outputs = {
      {"alpha", "تهران پایتخت ایران است."},
      {"beta", "پاسخ: تهران."},
      {"gamma", "نمی‌دانم."},
      {"delta", "پایتخت ایران شهر تهران است."},
  };
  std::string rendered = render_judge_prompt(JudgePromptTemplate::default_template(),
                                             "پایتخت ایران کجاست؟", outputs);
  CHECK(rendered == slurp(PARSKIT_GOLDEN_DIR "/judge_prompt_4sys.txt"));

  // Labels are positional, one per system, in input order.
  for (const char* label : {"system1:", "system2:", "system3:", "system4:"})
    CHECK(rendered.find(label) != std::string::npos);
  CHECK(rendered.find("system5:") == std::string::npos);
  CHECK(rendered.find("alpha") == std::string::npos);  // names never leak
}

TEST_CASE("judge prompt edge cases") {
  JudgePromptTemplate tpl = JudgePromptTemplate::default_template();

  std::vector<std::pair<std::string, std::string>> one = {{"sys", "short answer"}};
  std::string r = render_judge_prompt(tpl, "question?", one);
  CHECK(r == tpl.header + "\n\nPrompt:\n\nquestion?\n\nsystem1:\n\nshort answer\n");

  // Newlines inside an output are embedded verbatim.
  std::vector<std::pair<std::string, std::string>> multi = {{"sys", "line one\nline two"}};
  CHECK(render_judge_prompt(tpl, "q", multi).find("line one\nline two") !=
        std::string::npos);

  CHECK(code_of([&] { render_judge_prompt(tpl, "q", {}); }) == errc::empty_outputs);
}

TEST_CASE("judge prompt is injective in the outputs") {
  // Distinct output lists of the same arity render distinctly.
  std::mt19937 rng(31);
  const std::vector<std::string> atoms = {"a", "b", "ab", "a\nb", ""};
  std::map<std::string, std::vector<std::string>> render_of;
  JudgePromptTemplate tpl = JudgePromptTemplate::default_template();
  for (int iter = 0; iter < 200; ++iter) {
    size_t n = 1 + rng() % 3;
    std::vector<std::string> texts;
    std::vector<std::pair<std::string, std::string>> outputs;
    for (size_t i = 0; i < n; ++i) {
      texts.push_back(atoms[rng() % atoms.size()]);
      outputs.push_back({"s" + std::to_string(i), texts.back()});
    }
    std::string r = render_judge_prompt(tpl, "fixed prompt", outputs);
    auto [it, fresh] = render_of.emplace(r, texts);
    if (!fresh) CHECK(it->second == texts);  // equal renders only from equal lists
  }
}

TEST_CASE("score aggregation") {
  std::vector<ScoreRow> rows = {
      {"sysB", "qa", "judge", 6.0},
      {"sysA", "summ", "judge", 8.0},
      {"sysB", "qa", "judge", 8.0},
      {"sysA", "qa", "f1", 0.5},
      {"sysA", "qa", "accuracy", 1.0},
  };
  ScoreReport rep = aggregate_scores(rows);
  REQUIRE(rep.rows.size() == 4);
  // Deterministic (system, dataset, metric) order.
  CHECK(rep.rows[0].system == "sysA");
  CHECK(rep.rows[0].dataset == "qa");
  CHECK(rep.rows[0].metric == "accuracy");
  CHECK(rep.rows[1].metric == "f1");
  CHECK(rep.rows[2].dataset == "summ");
  CHECK(rep.rows[3].system == "sysB");
  CHECK(rep.rows[3].mean == doctest::Approx(7.0));
  CHECK(rep.rows[3].support == 2);
  CHECK(rep.rows[1].mean == doctest::Approx(0.5));
  CHECK(rep.rows[1].support == 1);

  CHECK(aggregate_scores({}).rows.empty());

  std::vector<ScoreRow> bad_f1 = {{"s", "d", "f1", 1.5}};
  CHECK(code_of([&] { aggregate_scores(bad_f1); }) == errc::range_violation);
  std::vector<ScoreRow> bad_judge = {{"s", "d", "judge", 10.5}};
  CHECK(code_of([&] { aggregate_scores(bad_judge); }) == errc::range_violation);
  std::vector<ScoreRow> edge_judge = {{"s", "d", "judge", 10.0}};
  CHECK(aggregate_scores(edge_judge).rows[0].mean == 10.0);
  // Unknown metrics carry no range.
  std::vector<ScoreRow> latency = {{"s", "d", "latency_ms", 12345.0}};
  CHECK(aggregate_scores(latency).rows[0].mean == 12345.0);
}

TEST_CASE("declared metric ranges") {
  REQUIRE(metric_range("f1").has_value());
  CHECK(metric_range("f1")->second == 1.0);
  CHECK(metric_range("accuracy")->second == 1.0);
  CHECK(metric_range("semantic")->second == 1.0);
  CHECK(metric_range("judge")->second == 10.0);
  CHECK(metric_range("judge")->first == 0.0);
  CHECK_FALSE(metric_range("latency_ms").has_value());
}
