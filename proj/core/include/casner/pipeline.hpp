#ifndef CASNER_PIPELINE_HPP
#define CASNER_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "casner/backend.hpp"
#include "casner/classification.hpp"
#include "casner/extraction.hpp"
#include "casner/taxonomy.hpp"
#include "casner/types.hpp"

namespace casner {

/// End-to-end cascade configuration. Exactly one of `taxonomy` (progressive
/// multi-granularity labeling) or `flat_types` (single-level labeling) must
/// be set.
struct PipelineConfig {
  ExtractionConfig extraction;
  ClassifyConfig classification;
  ClassificationMode mode = ClassificationMode::Supervised;
  std::optional<Taxonomy> taxonomy;
  std::optional<TypeList> flat_types;
  std::vector<ExtractionDemo> extraction_demos;
  bool fail_fast = false;
  int workers = 1;
  std::uint64_t seed = 0;
  std::string extractor_model = "extractor";
  std::string classifier_model = "classifier";
};

/// Extract, fuse, then classify each fused span (progressively in taxonomy
/// mode). Unknown-labeled entities stay in the result; filtering is the
/// evaluator's concern.
AnnotatedSentence run_ner_sentence(ChatBackend& extractor,
                                   ChatBackend& classifier, const Sentence& s,
                                   const PipelineConfig& cfg);

struct SentenceError {
  std::string id;
  std::string error;
};

struct RunManifest {
  std::string config_hash;
  std::string extractor_model;
  std::string classifier_model;
  std::uint64_t seed = 0;
  int rounds = 0;
  std::string mode;
  std::vector<SentenceError> errors;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;
};

struct BatchResult {
  std::vector<AnnotatedSentence> predictions;  // input order
  RunManifest manifest;
};

/// Runs the cascade over a corpus with a bounded worker pool. Output order is
/// input order regardless of scheduling; per-sentence failures land in the
/// manifest and leave an empty prediction unless fail_fast is set.
BatchResult run_ner_batch(ChatBackend& extractor, ChatBackend& classifier,
                          std::span<const Sentence> sentences,
                          const PipelineConfig& cfg);

/// Stable hash of the semantically relevant config fields.
std::string pipeline_config_hash(const PipelineConfig& cfg);

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path);

}  // namespace casner

#endif  // CASNER_PIPELINE_HPP
