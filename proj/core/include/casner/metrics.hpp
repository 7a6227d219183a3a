#ifndef CASNER_METRICS_HPP
#define CASNER_METRICS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "casner/backend.hpp"
#include "casner/types.hpp"

namespace casner {

/// Per-category sample counts plus the derived quantities the distribution
/// metrics need. Zero-count categories participate in n.
class CategoryDistribution {
public:
  /// Requires a positive total count.
  static CategoryDistribution from_counts(
      const std::map<std::string, std::uint64_t>& counts);

  std::size_t category_count() const { return names_.size(); }  // n
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }

  std::vector<double> proportions() const;  // p_i, sums to 1
  double mean() const;                      // mu of the counts
  double stddev() const;                    // population sigma of the counts

private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Mean pairwise cosine similarity over unordered vector pairs, in [-1, 1].
/// Needs at least two vectors (DegenerateCategory) and no all-zero vector
/// (ZeroVector).
double cohesion(std::span<const EmbeddingVector> vectors);

/// Entropy of the category proportions divided by log2(n), in [0, 1];
/// zero-proportion terms contribute nothing. Needs n >= 2
/// (DegenerateDistribution).
double normalized_entropy(const CategoryDistribution& d);

/// Inequality of the category distribution, proportions sorted ascending:
/// G = (n + 1 - 2 * sum_i (n - i + 1) p_i) / n, in [0, (n-1)/n].
double gini(const CategoryDistribution& d);

/// Population standard deviation over mean of the category counts.
double variation_coefficient(const CategoryDistribution& d);

struct MetricThresholds {
  double cohesion_merge = 0.9;  // category merge candidate above this
  double entropy_min = 0.8;     // imbalance flag below this
  double gini_max = 0.4;        // inequality flag above this
  double cv_max = 0.5;          // dispersion flag above this
};

struct CategoryCohesion {
  std::string category;
  std::optional<double> value;  // nullopt: skipped (< 2 entities)
  std::size_t entity_count = 0;
  std::size_t sampled = 0;
  bool merge_flag = false;
};

struct MetricReport {
  CategoryDistribution distribution;
  std::vector<CategoryCohesion> cohesion;
  double normalized_entropy = 0.0;
  double gini = 0.0;
  double variation_coefficient = 0.0;
  bool entropy_flag = false;
  bool gini_flag = false;
  bool cv_flag = false;
  MetricThresholds thresholds;

  bool any_cohesion_flag() const;
  std::optional<double> mean_cohesion() const;
};

struct MetricReportConfig {
  MetricThresholds thresholds;
  std::size_t cohesion_sample_cap = 200;  // per-category embedding cap
  std::uint64_t seed = 0;                 // governs the subsample
};

/// Distribution metrics over the gold label counts plus per-category cohesion
/// from entity-surface embeddings. `embeddings` may be null, in which case
/// every category is reported cohesion-skipped. Categories with fewer than
/// two entities are skipped, never fatal.
MetricReport metric_report(std::span<const AnnotatedSentence> ds,
                           EmbeddingBackend* embeddings,
                           const MetricReportConfig& cfg = {});

/// Label-name counts of a dataset, the distribution domain.
std::map<std::string, std::uint64_t> label_counts(
    std::span<const AnnotatedSentence> ds);

/// Report serialization: a JSON document and a tab-separated table with one
/// row per category.
std::string metric_report_json(const MetricReport& report);
std::string metric_report_table(const MetricReport& report);

}  // namespace casner

#endif  // CASNER_METRICS_HPP
