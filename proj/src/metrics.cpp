#include "parskit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "parskit/error.hpp"

namespace parskit {

namespace {

double cosine_floor0(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    raise(errc::dimension_mismatch, "embedding dimensions differ");
  if (a.empty()) raise(errc::dimension_mismatch, "empty embedding vector");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  return cos < 0.0 ? 0.0 : cos;
}

double greedy_side(const EmbeddedSequence& from, const EmbeddedSequence& to) {
  double sum = 0.0;
  for (const auto& v : from.vectors) {
    double best = 0.0;
    for (const auto& w : to.vectors) best = std::max(best, cosine_floor0(v, w));
    sum += best;
  }
  return sum / static_cast<double>(from.vectors.size());
}

}  // namespace

F1Breakdown f1_breakdown(std::span<const LabeledPair> pairs) {
  if (pairs.empty()) raise(errc::empty_input, "no labeled pairs");

  std::map<std::string, int64_t> tp, fp, fn, support;
  for (const LabeledPair& p : pairs) {
    if (p.gold.empty()) raise(errc::invalid_record, "empty gold label for id '" + p.id + "'");
    support[p.gold]++;
    if (p.prediction == p.gold) {
      tp[p.gold]++;
    } else {
      fn[p.gold]++;
      fp[p.prediction]++;
    }
    // every label seen on either side gets a class entry
    tp.try_emplace(p.prediction, 0);
    tp.try_emplace(p.gold, 0);
  }

  F1Breakdown out;
  double macro_sum = 0.0, weighted_sum = 0.0;
  for (const auto& [label, tp_count] : tp) {
    int64_t fp_count = fp.count(label) ? fp.at(label) : 0;
    int64_t fn_count = fn.count(label) ? fn.at(label) : 0;
    int64_t sup = support.count(label) ? support.at(label) : 0;
    double precision =
        tp_count + fp_count > 0 ? static_cast<double>(tp_count) / static_cast<double>(tp_count + fp_count) : 0.0;
    double recall =
        tp_count + fn_count > 0 ? static_cast<double>(tp_count) / static_cast<double>(tp_count + fn_count) : 0.0;
    double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    out.classes.push_back({label, precision, recall, f1, sup});
    macro_sum += f1;
    weighted_sum += f1 * static_cast<double>(sup);
    out.support += sup;
  }
  out.macro_f1 = macro_sum / static_cast<double>(out.classes.size());
  out.weighted_f1 = weighted_sum / static_cast<double>(out.support);
  return out;
}

double f1_score(std::span<const LabeledPair> pairs, Averaging averaging) {
  F1Breakdown b = f1_breakdown(pairs);
  return averaging == Averaging::macro ? b.macro_f1 : b.weighted_f1;
}

double containment_accuracy(std::span<const LabeledPair> pairs, const NormalizerConfig& cfg) {
  if (pairs.empty()) raise(errc::empty_input, "no labeled pairs");
  int64_t hits = 0;
  for (const LabeledPair& p : pairs) {
    if (p.gold.empty()) raise(errc::invalid_record, "empty gold answer for id '" + p.id + "'");
    std::string pred = normalize_document(p.prediction, cfg).text;
    std::string gold = normalize_document(p.gold, cfg).text;
    if (!gold.empty() && pred.find(gold) != std::string::npos) hits++;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

SemanticScore greedy_semantic_f1(const EmbeddedSequence& candidate,
                                 const EmbeddedSequence& reference) {
  if (candidate.vectors.empty() || reference.vectors.empty())
    raise(errc::empty_sequence, "both sequences need at least one vector");
  size_t dim = candidate.vectors.front().size();
  for (const auto& v : candidate.vectors)
    if (v.size() != dim) raise(errc::dimension_mismatch, "ragged candidate vectors");
  for (const auto& v : reference.vectors)
    if (v.size() != dim) raise(errc::dimension_mismatch, "ragged reference vectors");

  SemanticScore s;
  s.precision = greedy_side(candidate, reference);
  s.recall = greedy_side(reference, candidate);
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

JudgePromptTemplate JudgePromptTemplate::default_template() {
  JudgePromptTemplate tpl;
  tpl.header =
      "The followings are two ChatGPT-like systems' outputs. Please rate an "
      "overall score on a ten-point scale for each and give explanations to "
      "justify your scores.";
  return tpl;
}

std::string render_judge_prompt(
    const JudgePromptTemplate& tpl, std::string_view user_prompt,
    std::span<const std::pair<std::string, std::string>> outputs) {
  if (outputs.empty()) raise(errc::empty_outputs, "no system outputs to judge");
  std::vector<std::string> sections;
  sections.emplace_back(tpl.header);
  sections.emplace_back(tpl.prompt_label);
  sections.emplace_back(user_prompt);
  for (size_t i = 0; i < outputs.size(); ++i) {
    sections.push_back(tpl.system_label_prefix + std::to_string(i + 1) + ":");
    sections.push_back(outputs[i].second);
  }
  std::string out;
  for (size_t i = 0; i < sections.size(); ++i) {
    if (i) out += "\n\n";
    out += sections[i];
  }
  out += "\n";
  return out;
}

std::optional<std::pair<double, double>> metric_range(std::string_view metric) {
  if (metric == "f1" || metric == "accuracy" || metric == "semantic")
    return std::pair<double, double>{0.0, 1.0};
  if (metric == "judge") return std::pair<double, double>{0.0, 10.0};
  return std::nullopt;
}

ScoreReport aggregate_scores(std::span<const ScoreRow> rows) {
  // No rows is a valid (empty) report, unlike the pairwise metrics.
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, int64_t>> acc;
  for (const ScoreRow& r : rows) {
    if (auto range = metric_range(r.metric)) {
      if (r.value < range->first || r.value > range->second)
        raise(errc::range_violation, "metric '" + r.metric + "' value " +
                                         std::to_string(r.value) + " outside [" +
                                         std::to_string(range->first) + ", " +
                                         std::to_string(range->second) + "]");
    }
    auto& slot = acc[{r.system, r.dataset, r.metric}];
    slot.first += r.value;
    slot.second++;
  }
  ScoreReport report;
  for (const auto& [key, slot] : acc) {
    report.rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                           slot.first / static_cast<double>(slot.second), slot.second});
  }
  return report;
}

}  // namespace parskit
