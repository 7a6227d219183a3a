#include "casner/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "casner/errors.hpp"
#include "casner/hash.hpp"

namespace casner {

using nlohmann::json;

namespace {

void check_config(const PipelineConfig& cfg) {
  if (cfg.extraction.rounds < 1)
    throw ValidationError("pipeline needs at least one extraction round");
  if (cfg.taxonomy.has_value() == cfg.flat_types.has_value())
    throw ValidationError(
        "pipeline needs exactly one of a taxonomy or a flat type list");
  if (cfg.flat_types && cfg.flat_types->names.empty())
    throw ValidationError("flat type list is empty");
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Label deepest_label(const std::vector<Label>& path) {
  // Progressive descent yields one label per level; the deepest non-Unknown
  // one is the entity's label, or Unknown when even the coarse level escaped.
  for (auto it = path.rbegin(); it != path.rend(); ++it)
    if (!it->is_unknown()) return *it;
  return Label::unknown();
}

}  // namespace

AnnotatedSentence run_ner_sentence(ChatBackend& extractor,
                                   ChatBackend& classifier, const Sentence& s,
                                   const PipelineConfig& cfg) {
  check_config(cfg);
  AnnotatedSentence out;
  out.sentence = s;
  out.type_list.allow_unknown = cfg.mode == ClassificationMode::ZeroShot;

  std::vector<ExtractionRound> rounds;
  try {
    rounds = extract_rounds(extractor, s, cfg.extraction.rounds, cfg.extraction,
                            cfg.extraction_demos);
  } catch (const Error& e) {
    throw Error("sentence '" + s.id + "': " + e.what());
  }
  std::vector<std::vector<EntitySpan>> round_spans;
  round_spans.reserve(rounds.size());
  for (auto& r : rounds) round_spans.push_back(std::move(r.spans));
  std::vector<EntitySpan> fused = fuse_results(round_spans);
  std::sort(fused.begin(), fused.end());

  for (const auto& span : fused) {
    Label label;
    try {
      if (cfg.taxonomy) {
        const MarkedText marked = render_marked(s, {span});
        label = deepest_label(classify_progressive(
            classifier, marked, *cfg.taxonomy, cfg.mode, cfg.classification));
      } else {
        ClassificationQuery q{render_marked(s, {span}), *cfg.flat_types,
                              cfg.mode};
        label = classify_entity(classifier, q, {}, cfg.classification);
      }
    } catch (const Error& e) {
      throw Error("sentence '" + s.id + "': " + e.what());
    }
    out.entities.push_back({span, label});
    if (!label.is_unknown() && !out.type_list.contains(label.name()))
      out.type_list.names.push_back(label.name());
  }
  return out;
}

BatchResult run_ner_batch(ChatBackend& extractor, ChatBackend& classifier,
                          std::span<const Sentence> sentences,
                          const PipelineConfig& cfg) {
  check_config(cfg);
  BatchResult result;
  result.manifest.config_hash = pipeline_config_hash(cfg);
  result.manifest.extractor_model = cfg.extractor_model;
  result.manifest.classifier_model = cfg.classifier_model;
  result.manifest.seed = cfg.seed;
  result.manifest.rounds = cfg.extraction.rounds;
  result.manifest.mode =
      cfg.mode == ClassificationMode::ZeroShot ? "zero_shot" : "supervised";
  result.manifest.started_at = iso8601_now();

  result.predictions.resize(sentences.size());
  std::vector<std::optional<SentenceError>> errors(sentences.size());

  const int workers = std::max(
      1, std::min<int>(cfg.workers, static_cast<int>(sentences.size())));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  auto work = [&]() {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= sentences.size()) break;
      try {
        result.predictions[i] =
            run_ner_sentence(extractor, classifier, sentences[i], cfg);
      } catch (const Error& e) {
        errors[i] = SentenceError{sentences[i].id, e.what()};
        AnnotatedSentence empty;
        empty.sentence = sentences[i];
        empty.type_list.allow_unknown =
            cfg.mode == ClassificationMode::ZeroShot;
        result.predictions[i] = std::move(empty);
        if (cfg.fail_fast) abort.store(true);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (auto& err : errors)
    if (err) result.manifest.errors.push_back(std::move(*err));
  result.manifest.finished_at = iso8601_now();
  if (cfg.fail_fast && !result.manifest.errors.empty())
    throw Error("batch aborted: " + result.manifest.errors[0].id + ": " +
                result.manifest.errors[0].error);
  return result;
}

std::string pipeline_config_hash(const PipelineConfig& cfg) {
  json j;
  j["rounds"] = cfg.extraction.rounds;
  j["diversity_temperature"] = cfg.extraction.diversity_temperature;
  j["base_seed"] = cfg.extraction.base_seed;
  j["max_demos"] = cfg.extraction.max_demos;
  j["mode"] = cfg.mode == ClassificationMode::ZeroShot ? "zero_shot"
                                                       : "supervised";
  j["seed"] = cfg.seed;
  j["extractor_model"] = cfg.extractor_model;
  j["classifier_model"] = cfg.classifier_model;
  if (cfg.flat_types) j["flat_types"] = cfg.flat_types->names;
  if (cfg.taxonomy) {
    std::vector<std::string> names;
    for (const auto& n : cfg.taxonomy->nodes()) names.push_back(n.name);
    j["taxonomy"] = names;
  }
  return to_hex(fnv1a64(j.dump()));
}

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path) {
  json j;
  j["config_hash"] = manifest.config_hash;
  j["extractor_model"] = manifest.extractor_model;
  j["classifier_model"] = manifest.classifier_model;
  j["seed"] = manifest.seed;
  j["rounds"] = manifest.rounds;
  j["mode"] = manifest.mode;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  json errs = json::array();
  for (const auto& e : manifest.errors)
    errs.push_back({{"id", e.id}, {"error", e.error}});
  j["errors"] = std::move(errs);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace casner
