#include "casner/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "casner/errors.hpp"
#include "casner/hash.hpp"

namespace casner {

using nlohmann::json;

CategoryDistribution CategoryDistribution::from_counts(
    const std::map<std::string, std::uint64_t>& counts) {
  CategoryDistribution d;
  for (const auto& [name, count] : counts) {
    d.names_.push_back(name);
    d.counts_.push_back(count);
    d.total_ += count;
  }
  if (d.total_ == 0)
    throw DegenerateDistribution("distribution has no samples");
  return d;
}

std::vector<double> CategoryDistribution::proportions() const {
  std::vector<double> p(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i)
    p[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
  return p;
}

double CategoryDistribution::mean() const {
  return static_cast<double>(total_) / static_cast<double>(counts_.size());
}

double CategoryDistribution::stddev() const {
  const double mu = mean();
  double acc = 0.0;
  for (auto c : counts_) {
    const double d = static_cast<double>(c) - mu;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(counts_.size()));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionMismatch("cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw ZeroVector("cosine of an all-zero vector is undefined");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(std::span<const double>(a.values),
                           std::span<const double>(b.values));
}

double cohesion(std::span<const EmbeddingVector> vectors) {
  if (vectors.size() < 2)
    throw DegenerateCategory("cohesion needs at least two entities");
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i)
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      acc += cosine_similarity(vectors[i], vectors[j]);
      ++pairs;
    }
  return acc / static_cast<double>(pairs);
}

double normalized_entropy(const CategoryDistribution& d) {
  const std::size_t n = d.category_count();
  if (n < 2)
    throw DegenerateDistribution("normalized entropy needs n >= 2 categories");
  double h = 0.0;
  for (double p : d.proportions())
    if (p > 0.0) h -= p * std::log2(p);
  return h / std::log2(static_cast<double>(n));
}

double gini(const CategoryDistribution& d) {
  const std::size_t n = d.category_count();
  std::vector<double> p = d.proportions();
  std::sort(p.begin(), p.end());
  double weighted = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    weighted += static_cast<double>(n - i + 1) * p[i - 1];
  return (static_cast<double>(n) + 1.0 - 2.0 * weighted) /
         static_cast<double>(n);
}

double variation_coefficient(const CategoryDistribution& d) {
  const double mu = d.mean();
  if (mu <= 0.0) throw ZeroMean("variation coefficient needs a positive mean");
  return d.stddev() / mu;
}

bool MetricReport::any_cohesion_flag() const {
  return std::any_of(cohesion.begin(), cohesion.end(),
                     [](const CategoryCohesion& c) { return c.merge_flag; });
}

std::optional<double> MetricReport::mean_cohesion() const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& c : cohesion)
    if (c.value) {
      acc += *c.value;
      ++n;
    }
  if (!n) return std::nullopt;
  return acc / static_cast<double>(n);
}

std::map<std::string, std::uint64_t> label_counts(
    std::span<const AnnotatedSentence> ds) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& rec : ds)
    for (const auto& e : rec.entities)
      if (!e.label.is_unknown()) ++counts[e.label.name()];
  return counts;
}

MetricReport metric_report(std::span<const AnnotatedSentence> ds,
                           EmbeddingBackend* embeddings,
                           const MetricReportConfig& cfg) {
  MetricReport report;
  report.thresholds = cfg.thresholds;
  report.distribution = CategoryDistribution::from_counts(label_counts(ds));

  const std::size_t n = report.distribution.category_count();
  report.normalized_entropy =
      n >= 2 ? normalized_entropy(report.distribution) : 0.0;
  report.gini = gini(report.distribution);
  report.variation_coefficient = variation_coefficient(report.distribution);
  report.entropy_flag = report.normalized_entropy < cfg.thresholds.entropy_min;
  report.gini_flag = report.gini > cfg.thresholds.gini_max;
  report.cv_flag = report.variation_coefficient > cfg.thresholds.cv_max;

  // Entity surfaces per category, in corpus order.
  std::map<std::string, std::vector<std::string>> surfaces;
  for (const auto& rec : ds)
    for (const auto& e : rec.entities)
      if (!e.label.is_unknown())
        surfaces[e.label.name()].push_back(e.span.surface);

  for (const auto& name : report.distribution.names()) {
    CategoryCohesion entry;
    entry.category = name;
    auto it = surfaces.find(name);
    entry.entity_count = it == surfaces.end() ? 0 : it->second.size();
    if (embeddings && entry.entity_count >= 2) {
      std::vector<std::string> picked = it->second;
      if (picked.size() > cfg.cohesion_sample_cap) {
        std::mt19937_64 rng(record_stream_seed(cfg.seed, name, 0));
        std::shuffle(picked.begin(), picked.end(), rng);
        picked.resize(cfg.cohesion_sample_cap);
      }
      entry.sampled = picked.size();
      auto vectors = embeddings->embed_texts(picked);
      entry.value = cohesion(vectors);
      entry.merge_flag = *entry.value > cfg.thresholds.cohesion_merge;
    }
    report.cohesion.push_back(std::move(entry));
  }
  return report;
}

std::string metric_report_json(const MetricReport& report) {
  json j;
  j["normalized_entropy"] = report.normalized_entropy;
  j["gini"] = report.gini;
  j["variation_coefficient"] = report.variation_coefficient;
  j["flags"] = {{"entropy", report.entropy_flag},
                {"gini", report.gini_flag},
                {"cv", report.cv_flag},
                {"cohesion_merge", report.any_cohesion_flag()}};
  j["thresholds"] = {{"cohesion_merge", report.thresholds.cohesion_merge},
                     {"entropy_min", report.thresholds.entropy_min},
                     {"gini_max", report.thresholds.gini_max},
                     {"cv_max", report.thresholds.cv_max}};
  json cats = json::array();
  const auto& names = report.distribution.names();
  const auto& counts = report.distribution.counts();
  for (std::size_t i = 0; i < names.size(); ++i) {
    json c;
    c["category"] = names[i];
    c["count"] = counts[i];
    const auto& coh = report.cohesion[i];
    if (coh.value) {
      c["cohesion"] = *coh.value;
      c["merge_flag"] = coh.merge_flag;
      c["sampled"] = coh.sampled;
    } else {
      c["cohesion"] = nullptr;
      c["cohesion_skipped"] = true;
    }
    cats.push_back(std::move(c));
  }
  j["categories"] = std::move(cats);
  return j.dump(2);
}

std::string metric_report_table(const MetricReport& report) {
  std::ostringstream out;
  out << "category\tcount\tcohesion\tmerge_flag\n";
  const auto& names = report.distribution.names();
  const auto& counts = report.distribution.counts();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& coh = report.cohesion[i];
    out << names[i] << '\t' << counts[i] << '\t';
    if (coh.value)
      out << *coh.value << '\t' << (coh.merge_flag ? 1 : 0) << '\n';
    else
      out << "skipped\t0\n";
  }
  out << "# normalized_entropy\t" << report.normalized_entropy << '\n';
  out << "# gini\t" << report.gini << '\n';
  out << "# variation_coefficient\t" << report.variation_coefficient << '\n';
  return out.str();
}

}  // namespace casner
