#ifndef CASNER_DATAIO_HPP
#define CASNER_DATAIO_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "casner/backend.hpp"
#include "casner/types.hpp"

namespace casner {

// --- JSONL corpus ---
// One record per line:
//   {"id": ..., "language": ..., "text": ...,
//    "entities": [{"start": n, "end": n, "label": ..., "level": ...}],
//    "type_list": [...], "allow_unknown": bool}
// The Unknown sentinel serializes as label "unknown" at level "unknown".

std::string corpus_record_json(const AnnotatedSentence& rec);
AnnotatedSentence corpus_record_from_json(const std::string& line,
                                          std::size_t lineno = 0);

std::vector<AnnotatedSentence> read_corpus(const std::filesystem::path& path);
void write_corpus(std::span<const AnnotatedSentence> ds,
                  const std::filesystem::path& path);

// --- CoNLL BIO ---
// token<TAB>tag lines, blank line between sentences. Reading joins tokens
// with single spaces and keeps the token offsets, so a valid file round-trips
// exactly. Labels are flat.

std::vector<AnnotatedSentence> read_conll(const std::filesystem::path& path,
                                          bool lenient = false,
                                          const std::string& language = "en");
void write_conll(std::span<const AnnotatedSentence> ds,
                 const std::filesystem::path& path);

// --- stratified sampling ---

struct CategorySample {
  std::uint64_t available = 0;  // n_i
  std::uint64_t quota = 0;      // s_i = min(floor(S/m), n_i)
  std::uint64_t drawn = 0;      // labels actually drawn (== quota)
  std::uint64_t effective = 0;  // labels of this category in the sample
};

struct SampleManifest {
  std::uint64_t requested = 0;  // S
  std::uint64_t categories = 0;  // m
  std::uint64_t seed = 0;
  std::map<std::string, CategorySample> per_category;
  std::size_t sentence_count = 0;
};

struct SampleResult {
  std::vector<AnnotatedSentence> sample;  // input order
  SampleManifest manifest;
};

/// Draws s_i = min(floor(S/m), n_i) labels per category uniformly without
/// replacement, then takes every sentence covering a drawn label. Co-occurring
/// labels ride along; the manifest records the effective counts.
SampleResult stratified_sample(std::span<const AnnotatedSentence> ds,
                               std::uint64_t size, std::uint64_t seed);

std::string sample_manifest_json(const SampleManifest& manifest);

// --- splitting ---

struct SplitResult {
  std::vector<AnnotatedSentence> train, dev, test;
};

/// Seeded shuffle then cut; part sizes are the largest-remainder
/// apportionment of |ds| by the ratios.
SplitResult split_dataset(std::span<const AnnotatedSentence> ds,
                          std::array<double, 3> ratios, std::uint64_t seed);

/// The largest-remainder sizes themselves (exposed for tests and manifests).
std::array<std::size_t, 3> apportion_sizes(std::size_t total,
                                           std::array<double, 3> ratios);

// --- decontamination ---

struct DecontaminationResult {
  std::vector<AnnotatedSentence> kept;
  std::vector<AnnotatedSentence> excluded;
  std::vector<double> excluded_scores;  // max cosine per excluded record
};

/// Excludes every candidate whose embedding cosine similarity against any
/// reference sentence strictly exceeds the threshold.
DecontaminationResult decontaminate(std::span<const AnnotatedSentence> ds,
                                    std::span<const Sentence> reference,
                                    EmbeddingBackend& embeddings,
                                    double threshold = 0.8);

}  // namespace casner

#endif  // CASNER_DATAIO_HPP
