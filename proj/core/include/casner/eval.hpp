#ifndef CASNER_EVAL_HPP
#define CASNER_EVAL_HPP

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "casner/taxonomy.hpp"
#include "casner/types.hpp"

namespace casner {

/// What to do with Unknown-labeled predictions. Drop treats them as "not in
/// this ontology" claims; CountAsFalsePositive scores them against the gold.
enum class UnknownPolicy { Drop, CountAsFalsePositive };

struct Scores {
  std::uint64_t tp = 0, fp = 0, fn = 0;

  double precision() const {
    return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  double recall() const {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  Scores& operator+=(const Scores& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

/// Exact harmonic mean, exposed so reports can re-derive F1 from P and R.
double f1_score(double precision, double recall);

/// Strict span scoring: a prediction is a true positive iff (start, end,
/// label) exactly match a gold entity, each gold matched at most once.
/// Micro-averaged over the corpus; pred and gold must carry the same sentence
/// ids (AlignmentError).
Scores score_spans(std::span<const AnnotatedSentence> pred,
                   std::span<const AnnotatedSentence> gold,
                   UnknownPolicy policy = UnknownPolicy::Drop);

/// Span-only scoring: (start, end) matching, labels ignored.
Scores extraction_scores(std::span<const AnnotatedSentence> pred,
                         std::span<const AnnotatedSentence> gold);

/// Fraction of exact (pred, gold) label matches. Throws EmptyInput.
double classifier_accuracy(std::span<const std::pair<Label, Label>> preds);

struct EvalRow {
  std::string language;     // "" = all
  std::string granularity;  // "" = as recorded
  std::string category;     // "" = all categories
  Scores scores;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // grouped rows, empty groups omitted
  Scores overall;             // micro over everything
  double macro_precision = 0.0;  // averaged over per-category rows
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::size_t macro_categories = 0;
};

/// Groups raw rows into a report: micro sums per (language, granularity,
/// category), an overall row, and macro averages over the per-category rows.
EvalReport aggregate_report(std::span<const EvalRow> rows);

/// Builds the grouped rows for a (pred, gold) pair. When a taxonomy is given
/// and labels live on it, scores are additionally produced at every coarser
/// granularity by lifting labels to that level.
std::vector<EvalRow> evaluate_to_rows(std::span<const AnnotatedSentence> pred,
                                      std::span<const AnnotatedSentence> gold,
                                      UnknownPolicy policy = UnknownPolicy::Drop,
                                      const Taxonomy* tax = nullptr);

std::string eval_report_json(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

}  // namespace casner

#endif  // CASNER_EVAL_HPP
