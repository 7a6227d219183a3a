// casner: cascaded extract-then-classify NER over chat-completion endpoints,
// plus the dataset tooling (metrics, dynamic re-categorization, sampling,
// splitting, decontamination, format conversion).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "casner/backend.hpp"
#include "casner/config.hpp"
#include "casner/dataio.hpp"
#include "casner/dyncat.hpp"
#include "casner/errors.hpp"
#include "casner/eval.hpp"
#include "casner/metrics.hpp"
#include "casner/pipeline.hpp"
#include "casner/taxonomy.hpp"
#include "casner/validate.hpp"

namespace fs = std::filesystem;
using namespace casner;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string replay_path;
  std::uint64_t seed = 0;
  bool mock_embeddings = false;

  KVConfig config;
  std::shared_ptr<ReplayLog> replay;
  bool replay_playback = false;

  void finalize() {
    if (!config_path.empty()) config = KVConfig::load(config_path);
    if (!replay_path.empty()) {
      if (fs::exists(replay_path)) {
        replay = std::make_shared<ReplayLog>(ReplayLog::load(replay_path));
        replay_playback = true;
      } else {
        replay = std::make_shared<ReplayLog>();  // record mode
      }
    }
  }

  void save_replay() const {
    if (replay && !replay_playback) replay->save(replay_path);
  }

  HttpConfig http_config(const std::string& prefix) const {
    HttpConfig http;
    http.base_url = config.get_or(prefix + ".base_url", "");
    http.model = config.get_or(prefix + ".model", prefix);
    http.api_key_env = config.get_or(prefix + ".api_key_env", "");
    http.timeout_seconds = config.get_double_or("timeout_seconds", 30.0);
    http.retries = static_cast<int>(config.get_int_or("retries", 2));
    http.max_inflight = static_cast<int>(config.get_int_or("max_inflight", 8));
    return http;
  }

  std::shared_ptr<ChatBackend> chat_backend(const std::string& prefix) const {
    if (replay && replay_playback)
      return std::make_shared<ReplayChatBackend>(replay);
    const HttpConfig http = http_config(prefix);
    if (http.base_url.empty())
      throw ValidationError("no " + prefix +
                            ".base_url configured and no replay file given");
    auto real = std::make_shared<HttpChatBackend>(http);
    if (replay) return std::make_shared<ReplayChatBackend>(replay, real);
    return real;
  }

  std::shared_ptr<EmbeddingBackend> embedding_backend() const {
    if (mock_embeddings) {
      const auto dim = static_cast<std::size_t>(
          config.get_int_or("embedding.dimension", 64));
      return std::make_shared<HashEmbeddingBackend>(dim);
    }
    if (replay && replay_playback)
      return std::make_shared<ReplayEmbeddingBackend>(replay);
    const HttpConfig http = http_config("embedding");
    if (http.base_url.empty())
      throw ValidationError(
          "no embedding.base_url configured; pass --mock-embeddings or "
          "--replay for offline runs");
    auto real = std::make_shared<HttpEmbeddingBackend>(http);
    if (replay) return std::make_shared<ReplayEmbeddingBackend>(replay, real);
    return real;
  }
};

std::vector<Sentence> sentences_of(const std::vector<AnnotatedSentence>& ds) {
  std::vector<Sentence> out;
  out.reserve(ds.size());
  for (const auto& rec : ds) out.push_back(rec.sentence);
  return out;
}

TypeList parse_type_list(const std::string& csv, bool allow_unknown) {
  TypeList tl;
  tl.allow_unknown = allow_unknown;
  std::string current;
  for (char c : csv) {
    if (c == ',') {
      if (!current.empty()) tl.names.push_back(current);
      current.clear();
    } else if (!(current.empty() && c == ' ')) {
      current.push_back(c);
    }
  }
  if (!current.empty()) tl.names.push_back(current);
  return tl;
}

std::array<double, 3> parse_ratios(const std::string& spec) {
  std::array<double, 3> ratios{};
  std::istringstream in(spec);
  std::string part;
  std::size_t i = 0;
  while (std::getline(in, part, ':')) {
    if (i >= 3) throw ValidationError("ratios must have three parts, like 1:1:3");
    ratios[i++] = std::stod(part);
  }
  if (i != 3) throw ValidationError("ratios must have three parts, like 1:1:3");
  return ratios;
}

struct NerArgs {
  std::string input, output, manifest, taxonomy_path, type_list_csv, demos_path;
  int rounds = 3;
  std::string mode = "supervised";
  bool fail_fast = false;
  int workers = 1;
};

PipelineConfig pipeline_config(const NerArgs& args, const GlobalOpts& global) {
  PipelineConfig cfg;
  cfg.extraction.rounds = args.rounds;
  cfg.extraction.base_seed = global.seed;
  cfg.seed = global.seed;
  cfg.mode = args.mode == "zero-shot" ? ClassificationMode::ZeroShot
                                      : ClassificationMode::Supervised;
  cfg.fail_fast = args.fail_fast;
  cfg.workers = args.workers > 0
                    ? args.workers
                    : static_cast<int>(global.config.get_int_or("workers", 1));
  cfg.extractor_model = global.config.get_or("extractor.model", "extractor");
  cfg.classifier_model = global.config.get_or("classifier.model", "classifier");
  if (!args.taxonomy_path.empty()) {
    cfg.taxonomy = load_taxonomy(args.taxonomy_path);
  } else if (!args.type_list_csv.empty()) {
    cfg.flat_types = parse_type_list(args.type_list_csv,
                                     cfg.mode == ClassificationMode::ZeroShot);
  } else {
    throw ValidationError("pass --taxonomy or --type-list");
  }
  if (!args.demos_path.empty()) {
    const auto demo_ds = read_corpus(args.demos_path);
    for (const auto& rec : demo_ds) {
      if (cfg.extraction_demos.size() >= cfg.extraction.max_demos) break;
      std::vector<EntitySpan> spans;
      for (const auto& e : rec.entities) spans.push_back(e.span);
      cfg.extraction_demos.push_back(
          {rec.sentence, render_marked(rec.sentence, spans)});
    }
  }
  return cfg;
}

int cmd_ner(const NerArgs& args, GlobalOpts& global, bool extract_only) {
  const auto ds = read_corpus(args.input);
  PipelineConfig cfg = pipeline_config(args, global);
  auto extractor = global.chat_backend("extractor");

  BatchResult batch;
  if (extract_only) {
    // Extraction half only: fused spans carry the Unknown sentinel.
    batch.manifest.config_hash = pipeline_config_hash(cfg);
    batch.manifest.extractor_model = cfg.extractor_model;
    batch.manifest.classifier_model = "";
    batch.manifest.seed = cfg.seed;
    batch.manifest.rounds = cfg.extraction.rounds;
    batch.manifest.mode = "extract";
    for (const auto& rec : ds) {
      AnnotatedSentence pred;
      pred.sentence = rec.sentence;
      pred.type_list.allow_unknown = true;
      try {
        auto rounds = extract_rounds(*extractor, rec.sentence,
                                     cfg.extraction.rounds, cfg.extraction,
                                     cfg.extraction_demos);
        std::vector<std::vector<EntitySpan>> spans;
        for (auto& r : rounds) spans.push_back(std::move(r.spans));
        for (const auto& sp : fuse_results(spans))
          pred.entities.push_back({sp, Label::unknown()});
      } catch (const Error& e) {
        batch.manifest.errors.push_back({rec.sentence.id, e.what()});
        if (cfg.fail_fast) throw;
      }
      batch.predictions.push_back(std::move(pred));
    }
  } else {
    auto classifier = global.chat_backend("classifier");
    batch = run_ner_batch(*extractor, *classifier, sentences_of(ds), cfg);
  }

  write_corpus(batch.predictions, args.output);
  const std::string manifest_path =
      args.manifest.empty() ? args.output + ".manifest.json" : args.manifest;
  write_manifest(batch.manifest, manifest_path);
  global.save_replay();
  std::cerr << "wrote " << batch.predictions.size() << " predictions to "
            << args.output << " (" << batch.manifest.errors.size()
            << " errors)\n";
  return 0;
}

int cmd_classify(const NerArgs& args, GlobalOpts& global) {
  const auto ds = read_corpus(args.input);
  PipelineConfig cfg = pipeline_config(args, global);
  auto classifier = global.chat_backend("classifier");

  std::vector<AnnotatedSentence> out;
  out.reserve(ds.size());
  for (const auto& rec : ds) {
    AnnotatedSentence labeled = rec;
    for (auto& entity : labeled.entities) {
      const MarkedText marked = render_marked(rec.sentence, {entity.span});
      if (cfg.taxonomy) {
        std::vector<Label> path = classify_progressive(
            *classifier, marked, *cfg.taxonomy, cfg.mode, cfg.classification);
        entity.label = Label::unknown();
        for (auto it = path.rbegin(); it != path.rend(); ++it)
          if (!it->is_unknown()) {
            entity.label = *it;
            break;
          }
      } else {
        ClassificationQuery q{marked, *cfg.flat_types, cfg.mode};
        entity.label = classify_entity(*classifier, q, {}, cfg.classification);
      }
      if (!entity.label.is_unknown() &&
          !labeled.type_list.contains(entity.label.name()))
        labeled.type_list.names.push_back(entity.label.name());
    }
    out.push_back(std::move(labeled));
  }
  write_corpus(out, args.output);
  global.save_replay();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascaded two-stage NER toolkit"};
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--config", global.config_path,
                 "key=value config file (endpoints, models, timeouts)");
  app.add_option("--seed", global.seed, "run seed for every stochastic step");
  app.add_option("--replay", global.replay_path,
                 "replay file: playback when it exists, record otherwise");
  app.add_flag("--mock-embeddings", global.mock_embeddings,
               "deterministic hash-based embedding backend");

  // --- ner / extract / classify ---
  NerArgs ner;
  auto* ner_cmd = app.add_subcommand("ner", "run the full cascade over a corpus");
  ner_cmd->add_option("--input", ner.input, "input corpus (JSONL)")->required();
  ner_cmd->add_option("--output", ner.output, "predictions file (JSONL)")
      ->required();
  ner_cmd->add_option("--manifest", ner.manifest,
                      "manifest sidecar path (default <output>.manifest.json)");
  ner_cmd->add_option("--taxonomy", ner.taxonomy_path, "taxonomy file");
  ner_cmd->add_option("--type-list", ner.type_list_csv,
                      "comma-separated flat type list");
  ner_cmd->add_option("--rounds", ner.rounds,
                      "extraction repetitions per sentence")
      ->default_val(3);
  ner_cmd->add_option("--mode", ner.mode, "supervised | zero-shot")
      ->check(CLI::IsMember({"supervised", "zero-shot"}));
  ner_cmd->add_option("--demos", ner.demos_path,
                      "corpus whose records become few-shot demonstrations");
  ner_cmd->add_flag("--fail-fast", ner.fail_fast,
                    "abort the batch on the first sentence error");
  ner_cmd->add_option("--workers", ner.workers, "sentence-level parallelism");

  NerArgs extract;
  auto* extract_cmd =
      app.add_subcommand("extract", "extraction + fusion only, no labels");
  extract_cmd->add_option("--input", extract.input, "input corpus (JSONL)")
      ->required();
  extract_cmd->add_option("--output", extract.output, "spans file (JSONL)")
      ->required();
  extract_cmd->add_option("--rounds", extract.rounds,
                          "extraction repetitions per sentence")
      ->default_val(3);
  extract_cmd->add_option("--demos", extract.demos_path,
                          "corpus whose records become demonstrations");
  extract_cmd->add_flag("--fail-fast", extract.fail_fast,
                        "abort on the first sentence error");

  NerArgs classify;
  auto* classify_cmd = app.add_subcommand(
      "classify", "label existing spans against a type inventory");
  classify_cmd->add_option("--input", classify.input, "corpus with spans")
      ->required();
  classify_cmd->add_option("--output", classify.output, "labeled corpus")
      ->required();
  classify_cmd->add_option("--taxonomy", classify.taxonomy_path, "taxonomy file");
  classify_cmd->add_option("--type-list", classify.type_list_csv,
                           "comma-separated flat type list");
  classify_cmd->add_option("--mode", classify.mode, "supervised | zero-shot")
      ->check(CLI::IsMember({"supervised", "zero-shot"}));

  // --- eval ---
  std::string eval_pred, eval_gold, eval_policy = "drop", eval_tax, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "strict span scoring");
  eval_cmd->add_option("--pred", eval_pred, "prediction corpus")->required();
  eval_cmd->add_option("--gold", eval_gold, "gold corpus")->required();
  eval_cmd->add_option("--policy", eval_policy,
                       "unknown predictions: drop | count-as-fp")
      ->check(CLI::IsMember({"drop", "count-as-fp"}));
  eval_cmd->add_option("--taxonomy", eval_tax,
                       "score each granularity of this taxonomy too");
  eval_cmd->add_option("--output", eval_out, "report JSON path");

  // --- metrics ---
  std::string met_input, met_out, met_table;
  std::size_t met_cap = 200;
  auto* metrics_cmd =
      app.add_subcommand("metrics", "categorization-quality report");
  metrics_cmd->add_option("--input", met_input, "corpus (JSONL)")->required();
  metrics_cmd->add_option("--output", met_out, "report JSON path");
  metrics_cmd->add_option("--table", met_table, "plot-ready TSV path");
  metrics_cmd->add_option("--cohesion-cap", met_cap,
                          "per-category embedding sample cap");

  // --- dyncat run ---
  std::string dc_input, dc_tax, dc_syn, dc_output, dc_audit;
  DynCatConfig dc_cfg;
  auto* dyncat_cmd =
      app.add_subcommand("dyncat", "dynamic re-categorization tooling");
  auto* dyncat_run = dyncat_cmd->add_subcommand(
      "run", "4-round metric-gated re-categorization");
  dyncat_run->add_option("--input", dc_input, "corpus (JSONL)")->required();
  dyncat_run->add_option("--taxonomy", dc_tax, "taxonomy file")->required();
  dyncat_run->add_option("--synonyms", dc_syn, "synonym table file");
  dyncat_run->add_option("--output", dc_output, "re-categorized corpus")
      ->required();
  dyncat_run->add_option("--audit", dc_audit,
                         "audit log path (default <output>.audit.jsonl)");
  dyncat_run->add_option("--mix-probability", dc_cfg.mix_probability,
                         "round 1 baseline probability");
  dyncat_run->add_option("--synonym-probability", dc_cfg.synonym_probability,
                         "round 2 baseline probability");
  dyncat_run->add_option("--removal-probability", dc_cfg.removal_probability,
                         "round 3 baseline probability");
  dyncat_run->add_option("--merge-probability", dc_cfg.merge_probability,
                         "round 4 baseline probability");
  dyncat_run->add_option("--rare-percentile", dc_cfg.rare_percentile,
                         "round 4 rare-category share");

  // --- sample / split / decontaminate ---
  std::string sm_input, sm_output, sm_manifest;
  std::uint64_t sm_size = 0;
  auto* sample_cmd =
      app.add_subcommand("sample", "stratified sampling by label");
  sample_cmd->add_option("--input", sm_input, "corpus (JSONL)")->required();
  sample_cmd->add_option("--size", sm_size, "total sample size S")->required();
  sample_cmd->add_option("--output", sm_output, "sampled corpus")->required();
  sample_cmd->add_option("--manifest", sm_manifest,
                         "sampling manifest path (default <output>.manifest.json)");

  std::string sp_input, sp_ratios = "1:1:3", sp_prefix;
  auto* split_cmd = app.add_subcommand("split", "train/dev/test splitting");
  split_cmd->add_option("--input", sp_input, "corpus (JSONL)")->required();
  split_cmd->add_option("--ratios", sp_ratios, "three ratios, like 1:1:3");
  split_cmd->add_option("--out-prefix", sp_prefix,
                        "writes <prefix>.train/dev/test.jsonl")
      ->required();

  std::string de_input, de_ref, de_kept, de_excluded;
  double de_threshold = 0.8;
  auto* decon_cmd = app.add_subcommand(
      "decontaminate", "drop candidates too similar to a reference corpus");
  decon_cmd->add_option("--input", de_input, "candidate corpus")->required();
  decon_cmd->add_option("--reference", de_ref, "reference corpus")->required();
  decon_cmd->add_option("--threshold", de_threshold,
                        "exclusive cosine similarity bound");
  decon_cmd->add_option("--output", de_kept, "kept corpus")->required();
  decon_cmd->add_option("--excluded", de_excluded, "excluded corpus path");

  // --- convert / validate ---
  std::string cv_from, cv_to, cv_input, cv_output, cv_language = "en";
  bool cv_lenient = false;
  auto* convert_cmd =
      app.add_subcommand("convert", "JSONL <-> CoNLL BIO conversion");
  convert_cmd->add_option("--from", cv_from, "jsonl | conll")
      ->required()
      ->check(CLI::IsMember({"jsonl", "conll"}));
  convert_cmd->add_option("--to", cv_to, "jsonl | conll")
      ->required()
      ->check(CLI::IsMember({"jsonl", "conll"}));
  convert_cmd->add_option("--input", cv_input, "input file")->required();
  convert_cmd->add_option("--output", cv_output, "output file")->required();
  convert_cmd->add_flag("--lenient", cv_lenient,
                        "promote stray I- tags instead of failing");
  convert_cmd->add_option("--language", cv_language,
                          "language tag for CoNLL input");

  std::string va_input;
  auto* validate_cmd =
      app.add_subcommand("validate", "check every record invariant");
  validate_cmd->add_option("--input", va_input, "corpus (JSONL)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0, any usage error exits 2
  }

  try {
    global.finalize();

    if (ner_cmd->parsed()) return cmd_ner(ner, global, /*extract_only=*/false);
    if (extract_cmd->parsed()) {
      if (extract.taxonomy_path.empty() && extract.type_list_csv.empty())
        extract.type_list_csv = "entity";  // placeholder; labels stay Unknown
      return cmd_ner(extract, global, /*extract_only=*/true);
    }
    if (classify_cmd->parsed()) {
      classify.rounds = 1;
      return cmd_classify(classify, global);
    }

    if (eval_cmd->parsed()) {
      const auto pred = read_corpus(eval_pred);
      const auto gold = read_corpus(eval_gold);
      const UnknownPolicy policy = eval_policy == "count-as-fp"
                                       ? UnknownPolicy::CountAsFalsePositive
                                       : UnknownPolicy::Drop;
      std::optional<Taxonomy> tax;
      if (!eval_tax.empty()) tax = load_taxonomy(eval_tax);
      const auto rows =
          evaluate_to_rows(pred, gold, policy, tax ? &*tax : nullptr);
      const auto report = aggregate_report(rows);
      std::cout << eval_report_table(report);
      if (!eval_out.empty()) {
        std::ofstream out(eval_out, std::ios::binary);
        out << eval_report_json(report) << '\n';
      }
      return 0;
    }

    if (metrics_cmd->parsed()) {
      const auto ds = read_corpus(met_input);
      MetricReportConfig cfg;
      cfg.cohesion_sample_cap = met_cap;
      cfg.seed = global.seed;
      std::shared_ptr<EmbeddingBackend> emb;
      try {
        emb = global.embedding_backend();
      } catch (const ValidationError&) {
        emb = nullptr;  // counts-only report; cohesion skipped
      }
      const auto report = metric_report(ds, emb.get(), cfg);
      std::cout << metric_report_table(report);
      if (!met_out.empty()) {
        std::ofstream out(met_out, std::ios::binary);
        out << metric_report_json(report) << '\n';
      }
      if (!met_table.empty()) {
        std::ofstream out(met_table, std::ios::binary);
        out << metric_report_table(report);
      }
      global.save_replay();
      return 0;
    }

    if (dyncat_run->parsed()) {
      const auto ds = read_corpus(dc_input);
      const Taxonomy tax = load_taxonomy(dc_tax);
      dc_cfg.seed = global.seed;
      if (!dc_syn.empty()) dc_cfg.synonym_table = load_synonym_table(dc_syn);
      std::shared_ptr<EmbeddingBackend> emb;
      if (global.mock_embeddings || !global.replay_path.empty() ||
          global.config.has("embedding.base_url")) {
        emb = global.embedding_backend();
        dc_cfg.embeddings = emb.get();
      }
      const auto result = run_dynamic_categorization(ds, tax, dc_cfg);
      write_corpus(result.dataset(), dc_output);
      const std::string audit_path =
          dc_audit.empty() ? dc_output + ".audit.jsonl" : dc_audit;
      write_audit_log(result.audit, audit_path);
      global.save_replay();
      std::cerr << "4 rounds, " << result.audit.edits.size() << " edits, "
                << "thresholds "
                << (result.audit.thresholds_attained ? "attained" : "missed")
                << '\n';
      return 0;
    }

    if (sample_cmd->parsed()) {
      const auto ds = read_corpus(sm_input);
      const auto result = stratified_sample(ds, sm_size, global.seed);
      write_corpus(result.sample, sm_output);
      const std::string manifest_path =
          sm_manifest.empty() ? sm_output + ".manifest.json" : sm_manifest;
      std::ofstream out(manifest_path, std::ios::binary);
      out << sample_manifest_json(result.manifest) << '\n';
      return 0;
    }

    if (split_cmd->parsed()) {
      const auto ds = read_corpus(sp_input);
      const auto parts = split_dataset(ds, parse_ratios(sp_ratios), global.seed);
      write_corpus(parts.train, sp_prefix + ".train.jsonl");
      write_corpus(parts.dev, sp_prefix + ".dev.jsonl");
      write_corpus(parts.test, sp_prefix + ".test.jsonl");
      std::cerr << "split " << ds.size() << " -> " << parts.train.size() << "/"
                << parts.dev.size() << "/" << parts.test.size() << '\n';
      return 0;
    }

    if (decon_cmd->parsed()) {
      const auto ds = read_corpus(de_input);
      const auto ref = read_corpus(de_ref);
      auto emb = global.embedding_backend();
      const auto result =
          decontaminate(ds, sentences_of(ref), *emb, de_threshold);
      write_corpus(result.kept, de_kept);
      if (!de_excluded.empty()) write_corpus(result.excluded, de_excluded);
      global.save_replay();
      std::cerr << "kept " << result.kept.size() << ", excluded "
                << result.excluded.size() << '\n';
      return 0;
    }

    if (convert_cmd->parsed()) {
      if (cv_from == cv_to)
        throw ValidationError("--from and --to must differ");
      const auto ds = cv_from == "jsonl"
                          ? read_corpus(cv_input)
                          : read_conll(cv_input, cv_lenient, cv_language);
      if (cv_to == "jsonl")
        write_corpus(ds, cv_output);
      else
        write_conll(ds, cv_output);
      return 0;
    }

    if (validate_cmd->parsed()) {
      const auto ds = read_corpus(va_input);
      const auto report = validate_dataset(ds);
      for (const auto& v : report.violations)
        std::cout << v.record_id << '\t' << v.code << '\t' << v.message << '\n';
      std::cerr << report.violations.size() << " violations in " << ds.size()
                << " records\n";
      return report.ok() ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
