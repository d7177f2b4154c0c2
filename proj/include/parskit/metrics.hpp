#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "parskit/normalize.hpp"

namespace parskit {

// Evaluation utilities: classification F1, containment accuracy for
// extractive QA, greedy embedding-matching F1, judge prompt rendering and
// score aggregation.

struct LabeledPair {
  std::string id;
  std::string prediction;
  std::string gold;
};

enum class Averaging { macro, weighted };

struct ClassScore {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t support = 0;  // gold occurrences
};

struct F1Breakdown {
  std::vector<ClassScore> classes;  // sorted by label
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  int64_t support = 0;
};

// Labels are the union of gold and prediction values.  Per class
// F1 = 2PR/(P+R), defined as 0 when P+R == 0.  Throws errc::empty_input on
// an empty pair list and errc::invalid_record on an empty gold label.
F1Breakdown f1_breakdown(std::span<const LabeledPair> pairs);
double f1_score(std::span<const LabeledPair> pairs, Averaging averaging);

// A prediction is correct when the normalized gold string is a substring
// of the normalized prediction.  Both sides run through the same
// normalizer the corpus pipeline uses.
double containment_accuracy(std::span<const LabeledPair> pairs,
                            const NormalizerConfig& cfg);

struct EmbeddedSequence {
  std::vector<std::vector<double>> vectors;
};

struct SemanticScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy matching on raw vectors: precision is the mean over candidate
// tokens of the best cosine similarity against any reference token, recall
// the mirror image, F1 their harmonic mean.  Similarities are floored at 0
// so every score stays in [0, 1]; a zero vector matches nothing.  No IDF
// weighting, no rescaling.  Throws errc::empty_sequence and
// errc::dimension_mismatch.
SemanticScore greedy_semantic_f1(const EmbeddedSequence& candidate,
                                 const EmbeddedSequence& reference);

struct JudgePromptTemplate {
  std::string header;
  std::string prompt_label = "Prompt:";
  std::string system_label_prefix = "system";

  static JudgePromptTemplate default_template();
};

// Renders header, prompt and each system output as blank-line separated
// sections with positional labels system1..systemN.  Outputs are embedded
// verbatim.  Throws errc::empty_outputs on an empty outputs list.
std::string render_judge_prompt(
    const JudgePromptTemplate& tpl, std::string_view user_prompt,
    std::span<const std::pair<std::string, std::string>> outputs);

struct ScoreRow {
  std::string system;
  std::string dataset;
  std::string metric;
  double value = 0.0;
};

struct ScoreAggregate {
  std::string system;
  std::string dataset;
  std::string metric;
  double mean = 0.0;
  int64_t support = 0;
};

struct ScoreReport {
  std::vector<ScoreAggregate> rows;  // sorted by (system, dataset, metric)
};

// Declared value range for the metrics this library produces; unknown
// metric names are unconstrained.
std::optional<std::pair<double, double>> metric_range(std::string_view metric);

// Mean per (system, dataset, metric).  Throws errc::range_violation when a
// row's value falls outside its metric's declared range.
ScoreReport aggregate_scores(std::span<const ScoreRow> rows);

}  // namespace parskit
