#ifndef CASNER_DYNCAT_HPP
#define CASNER_DYNCAT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "casner/backend.hpp"
#include "casner/metrics.hpp"
#include "casner/taxonomy.hpp"
#include "casner/types.hpp"

namespace casner {

/// Sentinel type name produced by the merge round.
inline constexpr std::string_view kMiscellaneousName = "Miscellaneous";

struct DynCatConfig {
  std::uint64_t seed = 0;
  MetricThresholds thresholds;
  double cohesion_low = 0.5;  // round 3 damps removal below this

  // Baseline per-round probabilities, modulated multiplicatively per raised
  // metric flag (damp_factor or boost_factor, clamped to [0, 1]).
  double mix_probability = 0.3;
  double synonym_probability = 0.5;
  double removal_probability = 0.5;
  double merge_probability = 0.25;
  double damp_factor = 0.5;
  double boost_factor = 1.5;
  int max_rebalance_passes = 3;

  double rare_percentile = 10.0;  // round 4: share of categories eligible
  std::size_t cohesion_sample_cap = 200;

  std::map<std::string, std::vector<std::string>> synonym_table;

  /// Optional; rounds 1 and 3 use it for cohesion gating. When null those
  /// gates stay neutral and the audit log says so.
  EmbeddingBackend* embeddings = nullptr;
};

/// Synonym table file: `name<TAB>synonym1|synonym2...`, `#` comments.
std::map<std::string, std::vector<std::string>> load_synonym_table(
    const std::filesystem::path& path);

/// One record transformation, enough to replay it mechanically.
struct AuditEdit {
  int round = 0;
  std::string record_id;
  std::string action;  // lift | synonym | remove | merge
  std::string from;
  std::string to;     // empty for remove
  std::string level;  // lift only: target level name
};

/// Metric snapshot taken before a round (or rebalancing pass) applies.
struct RoundEvaluation {
  int round = 0;
  int pass = 0;  // 0 = main pass, 1.. = rebalancing
  double entropy = 0.0;
  double gini = 0.0;
  double cv = 0.0;
  bool entropy_flag = false;
  bool gini_flag = false;
  bool cv_flag = false;
  std::optional<double> mean_cohesion;  // rounds using embeddings only
  bool cohesion_flag = false;
  double effective_probability = 0.0;
  std::size_t edit_count = 0;
};

struct AuditLog {
  std::vector<RoundEvaluation> evaluations;
  std::vector<AuditEdit> edits;
  RoundEvaluation final_metrics;  // round = 5, after all rounds
  bool thresholds_attained = false;
};

void write_audit_log(const AuditLog& log, const std::filesystem::path& path);
AuditLog read_audit_log(const std::filesystem::path& path);

/// A record of the dynamic dataset: the annotated sentence plus the
/// transformations that produced it.
struct DynamicRecord {
  AnnotatedSentence record;
  std::vector<AuditEdit> provenance;
};

// The four re-categorization rounds. Each evaluates its designated metrics
// on the input, derives the effective probability, applies seeded per-record
// edits, and appends to the audit log when one is given. Label-consistency
// (every gold label in its own type list) holds after every round.

/// Round 1: per record, each type name is kept or lifted to its medium or
/// coarse ancestor; pair-cohesion above the merge threshold damps the
/// probability, and rebalancing passes re-run over below-mean categories
/// while entropy or Gini flags stay raised.
std::vector<AnnotatedSentence> mix_granularities(
    std::span<const AnnotatedSentence> ds, const Taxonomy& tax,
    const DynCatConfig& cfg, AuditLog* audit = nullptr);

/// Round 2: per record, type names found in the synonym table are replaced
/// (jointly in list and labels) by a seeded-chosen synonym; a high variation
/// coefficient boosts the probability, a high Gini damps it.
std::vector<AnnotatedSentence> replace_synonyms(
    std::span<const AnnotatedSentence> ds, const DynCatConfig& cfg,
    AuditLog* audit = nullptr);

/// Round 3: per record, list entries that are not gold labels are dropped;
/// low entropy or low mean cohesion damps the probability. Gold labels are
/// never dropped.
std::vector<AnnotatedSentence> remove_irrelevant(
    std::span<const AnnotatedSentence> ds, const DynCatConfig& cfg,
    AuditLog* audit = nullptr);

/// Round 4: globally rare type names are replaced by "Miscellaneous" in list
/// and labels; every raised metric flag boosts the probability. At most one
/// Miscellaneous entry survives per list.
std::vector<AnnotatedSentence> merge_miscellaneous(
    std::span<const AnnotatedSentence> ds, const Taxonomy& tax,
    const DynCatConfig& cfg, AuditLog* audit = nullptr);

struct DynCatResult {
  std::vector<DynamicRecord> records;
  AuditLog audit;

  std::vector<AnnotatedSentence> dataset() const;
};

/// Rounds in fixed order mix -> synonyms -> remove -> merge with metric
/// evaluation between rounds; deterministic in (ds, cfg.seed).
DynCatResult run_dynamic_categorization(std::span<const AnnotatedSentence> ds,
                                        const Taxonomy& tax,
                                        const DynCatConfig& cfg);

/// Applies a recorded edit stream to the input dataset; reproduces the run
/// that logged it.
std::vector<AnnotatedSentence> replay_audit(
    std::span<const AnnotatedSentence> ds, const AuditLog& audit);

}  // namespace casner

#endif  // CASNER_DYNCAT_HPP
