#include "casner/dyncat.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "casner/errors.hpp"
#include "casner/hash.hpp"

namespace casner {

using nlohmann::json;

std::map<std::string, std::vector<std::string>> load_synonym_table(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open synonym table " + path.string());
  std::map<std::string, std::vector<std::string>> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw ParseError("expected 'name<TAB>synonym1|synonym2...'", lineno);
    const std::string name = line.substr(0, tab);
    std::vector<std::string> synonyms;
    std::istringstream rest(line.substr(tab + 1));
    std::string syn;
    while (std::getline(rest, syn, '|'))
      if (!syn.empty()) synonyms.push_back(syn);
    if (synonyms.empty()) throw ParseError("no synonyms for '" + name + "'", lineno);
    table[name] = std::move(synonyms);
  }
  return table;
}

namespace {

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

std::mt19937_64 record_rng(const DynCatConfig& cfg, const std::string& id,
                           int round, int pass = 0) {
  return std::mt19937_64(record_stream_seed(
      cfg.seed, id, static_cast<std::uint64_t>(round) * 100 +
                        static_cast<std::uint64_t>(pass)));
}

bool coin(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Distinct type names of a record in a stable order: list order first, then
// any label names missing from the list.
std::vector<std::string> record_type_names(const AnnotatedSentence& rec) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto& n : rec.type_list.names)
    if (seen.insert(n).second) names.push_back(n);
  for (const auto& e : rec.entities)
    if (!e.label.is_unknown() && seen.insert(e.label.name()).second)
      names.push_back(e.label.name());
  return names;
}

// Renames `from` everywhere in the record. List entries dedup in place,
// keeping the earliest occurrence. A level override applies to renamed
// labels (granularity lifts); otherwise labels keep their level.
void rename_type(AnnotatedSentence& rec, const std::string& from,
                 const std::string& to,
                 std::optional<LabelLevel> level_override) {
  std::vector<std::string> names;
  bool have_to = false;
  for (const auto& n : rec.type_list.names) {
    const std::string& mapped = n == from ? to : n;
    if (mapped == to) {
      if (have_to) continue;
      have_to = true;
    }
    names.push_back(mapped);
  }
  rec.type_list.names = std::move(names);
  for (auto& e : rec.entities) {
    if (e.label.is_unknown() || e.label.name() != from) continue;
    e.label = Label(to, level_override.value_or(e.label.level()));
  }
}

void remove_list_entry(AnnotatedSentence& rec, const std::string& name) {
  auto& names = rec.type_list.names;
  names.erase(std::remove(names.begin(), names.end(), name), names.end());
}

void apply_edit(AnnotatedSentence& rec, const AuditEdit& edit) {
  if (edit.action == "remove") {
    remove_list_entry(rec, edit.from);
  } else if (edit.action == "lift") {
    rename_type(rec, edit.from, edit.to, level_from_name(edit.level));
  } else {  // synonym | merge
    rename_type(rec, edit.from, edit.to, std::nullopt);
  }
}

struct EditSink {
  int round;
  AuditLog* audit;
  std::vector<DynamicRecord>* records = nullptr;  // filled by the full run
  std::size_t count = 0;

  void apply(AnnotatedSentence& rec, std::size_t index, AuditEdit edit) {
    edit.round = round;
    edit.record_id = rec.sentence.id;
    apply_edit(rec, edit);
    ++count;
    if (audit) audit->edits.push_back(edit);
    if (records) (*records)[index].provenance.push_back(std::move(edit));
  }
};

RoundEvaluation evaluate_counts(std::span<const AnnotatedSentence> ds,
                                const DynCatConfig& cfg, int round, int pass) {
  RoundEvaluation eval;
  eval.round = round;
  eval.pass = pass;
  auto counts = label_counts(ds);
  if (counts.empty()) return eval;
  auto dist = CategoryDistribution::from_counts(counts);
  eval.entropy =
      dist.category_count() >= 2 ? normalized_entropy(dist) : 0.0;
  eval.gini = gini(dist);
  eval.cv = variation_coefficient(dist);
  eval.entropy_flag = eval.entropy < cfg.thresholds.entropy_min;
  eval.gini_flag = eval.gini > cfg.thresholds.gini_max;
  eval.cv_flag = eval.cv > cfg.thresholds.cv_max;
  return eval;
}

// Entity surfaces per category, subsampled with the config seed.
std::map<std::string, std::vector<std::string>> sampled_surfaces(
    std::span<const AnnotatedSentence> ds, const DynCatConfig& cfg,
    std::size_t cap) {
  std::map<std::string, std::vector<std::string>> surfaces;
  for (const auto& rec : ds)
    for (const auto& e : rec.entities)
      if (!e.label.is_unknown())
        surfaces[e.label.name()].push_back(e.span.surface);
  for (auto& [name, list] : surfaces) {
    if (list.size() <= cap) continue;
    std::mt19937_64 rng(record_stream_seed(cfg.seed, name, 77));
    std::shuffle(list.begin(), list.end(), rng);
    list.resize(cap);
  }
  return surfaces;
}

// Mean within-category cohesion over categories with at least two entities.
std::optional<double> dataset_mean_cohesion(
    std::span<const AnnotatedSentence> ds, const DynCatConfig& cfg) {
  if (!cfg.embeddings) return std::nullopt;
  auto surfaces = sampled_surfaces(ds, cfg, cfg.cohesion_sample_cap);
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& [name, list] : surfaces) {
    if (list.size() < 2) continue;
    acc += cohesion(cfg.embeddings->embed_texts(list));
    ++n;
  }
  if (!n) return std::nullopt;
  return acc / static_cast<double>(n);
}

// Round 1 gate: Eq.-3 cohesion of the pooled entities of a category and its
// taxonomy siblings. High values mean the category barely separates from its
// parent group, so lifting it is damped.
std::map<std::string, double> pair_cohesion_by_category(
    std::span<const AnnotatedSentence> ds, const Taxonomy& tax,
    const DynCatConfig& cfg) {
  std::map<std::string, double> out;
  if (!cfg.embeddings) return out;
  const std::size_t side_cap = std::max<std::size_t>(2, cfg.cohesion_sample_cap / 4);
  auto surfaces = sampled_surfaces(ds, cfg, side_cap);
  for (const auto& [name, own] : surfaces) {
    const TaxonomyNode* node = tax.find_unique(name);
    if (!node) {
      for (LabelLevel lv :
           {LabelLevel::Fine, LabelLevel::Medium, LabelLevel::Coarse})
        if ((node = tax.find(name, lv))) break;
    }
    if (!node || node->parent < 0) continue;
    const auto& parent = tax.nodes()[static_cast<std::size_t>(node->parent)];
    std::vector<std::string> pooled = own;
    for (int child_id : parent.children) {
      const auto& sibling = tax.nodes()[static_cast<std::size_t>(child_id)];
      if (sibling.name == name) continue;
      auto it = surfaces.find(sibling.name);
      if (it == surfaces.end()) continue;
      pooled.insert(pooled.end(), it->second.begin(), it->second.end());
    }
    if (pooled.size() < 2 || pooled.size() == own.size()) continue;
    out[name] = cohesion(cfg.embeddings->embed_texts(pooled));
  }
  return out;
}

void push_eval(AuditLog* audit, RoundEvaluation eval) {
  if (audit) audit->evaluations.push_back(std::move(eval));
}

}  // namespace

// ---------------------------------------------------------------------------
// Round 1: mix granularities
// ---------------------------------------------------------------------------

namespace {

// One mixing sweep. `only` restricts the sweep to the given categories
// (rebalancing passes target below-mean ones); empty means all.
void mix_pass(std::vector<AnnotatedSentence>& ds, const Taxonomy& tax,
              const DynCatConfig& cfg, double probability, int pass,
              const std::set<std::string>& only,
              const std::map<std::string, double>& pair_cohesion,
              EditSink& sink) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto& rec = ds[i];
    auto rng = record_rng(cfg, rec.sentence.id, 1, pass);
    for (const auto& name : record_type_names(rec)) {
      if (!only.empty() && !only.count(name)) continue;
      const TaxonomyNode* node = nullptr;
      for (LabelLevel lv : {LabelLevel::Fine, LabelLevel::Medium})
        if ((node = tax.find(name, lv))) break;
      if (!node) continue;  // coarse or off-taxonomy names cannot lift
      double p = probability;
      auto pc = pair_cohesion.find(name);
      if (pc != pair_cohesion.end() && pc->second > cfg.thresholds.cohesion_merge)
        p *= cfg.damp_factor;
      if (!coin(rng, clamp01(p))) continue;
      // Fine names lift to medium or coarse with equal odds; medium to coarse.
      const TaxonomyNode* target =
          &tax.nodes()[static_cast<std::size_t>(node->parent)];
      if (node->level == LabelLevel::Fine && target->parent >= 0 &&
          coin(rng, 0.5))
        target = &tax.nodes()[static_cast<std::size_t>(target->parent)];
      AuditEdit edit;
      edit.action = "lift";
      edit.from = name;
      edit.to = target->name;
      edit.level = std::string(level_name(target->level));
      sink.apply(rec, i, std::move(edit));
    }
  }
}

}  // namespace

std::vector<AnnotatedSentence> mix_granularities(
    std::span<const AnnotatedSentence> ds, const Taxonomy& tax,
    const DynCatConfig& cfg, AuditLog* audit) {
  // Precondition: gold labels resolvable in the taxonomy.
  for (const auto& rec : ds)
    for (const auto& e : rec.entities) {
      if (e.label.is_unknown()) continue;
      const bool known =
          e.label.level() == LabelLevel::Flat
              ? tax.contains(e.label.name())
              : tax.find(e.label.name(), e.label.level()) != nullptr;
      if (!known)
        throw UnresolvableLabel("label '" + e.label.name() +
                                "' of record '" + rec.sentence.id +
                                "' is not in the taxonomy");
    }

  std::vector<AnnotatedSentence> out(ds.begin(), ds.end());
  EditSink sink{1, audit};
  const auto pair_cohesion = pair_cohesion_by_category(ds, tax, cfg);

  RoundEvaluation eval = evaluate_counts(out, cfg, 1, 0);
  if (!pair_cohesion.empty()) {
    double acc = 0.0;
    for (const auto& [_, v] : pair_cohesion) acc += v;
    eval.mean_cohesion = acc / static_cast<double>(pair_cohesion.size());
    eval.cohesion_flag =
        std::any_of(pair_cohesion.begin(), pair_cohesion.end(),
                    [&](const auto& kv) {
                      return kv.second > cfg.thresholds.cohesion_merge;
                    });
  }
  eval.effective_probability = clamp01(cfg.mix_probability);
  mix_pass(out, tax, cfg, cfg.mix_probability, 0, {}, pair_cohesion, sink);
  eval.edit_count = sink.count;
  push_eval(audit, eval);

  // Rebalancing: lift more of the below-mean categories while the
  // distribution flags stay raised.
  for (int pass = 1; pass <= cfg.max_rebalance_passes; ++pass) {
    RoundEvaluation check = evaluate_counts(out, cfg, 1, pass);
    if (!check.entropy_flag && !check.gini_flag) break;
    int raised = (check.entropy_flag ? 1 : 0) + (check.gini_flag ? 1 : 0);
    double p = cfg.mix_probability;
    for (int f = 0; f < raised; ++f) p *= cfg.boost_factor;
    check.effective_probability = clamp01(p);

    auto counts = label_counts(out);
    if (counts.empty()) break;
    auto dist = CategoryDistribution::from_counts(counts);
    const double mean = dist.mean();
    std::set<std::string> below_mean;
    for (const auto& [name, count] : counts)
      if (static_cast<double>(count) < mean) below_mean.insert(name);
    if (below_mean.empty()) break;

    const std::size_t before = sink.count;
    mix_pass(out, tax, cfg, p, pass, below_mean, pair_cohesion, sink);
    check.edit_count = sink.count - before;
    push_eval(audit, check);
    if (check.edit_count == 0) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Round 2: synonyms
// ---------------------------------------------------------------------------

std::vector<AnnotatedSentence> replace_synonyms(
    std::span<const AnnotatedSentence> ds, const DynCatConfig& cfg,
    AuditLog* audit) {
  std::vector<AnnotatedSentence> out(ds.begin(), ds.end());
  EditSink sink{2, audit};

  RoundEvaluation eval = evaluate_counts(out, cfg, 2, 0);
  double p = cfg.synonym_probability;
  if (eval.cv_flag) p *= cfg.boost_factor;    // high dispersion: substitute more
  if (eval.gini_flag) p *= cfg.damp_factor;   // uneven distribution: hold back
  p = clamp01(p);
  eval.effective_probability = p;

  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& rec = out[i];
    auto rng = record_rng(cfg, rec.sentence.id, 2);
    for (const auto& name : record_type_names(rec)) {
      auto it = cfg.synonym_table.find(name);
      if (it == cfg.synonym_table.end()) continue;
      if (!coin(rng, p)) continue;
      const auto& synonyms = it->second;
      std::uniform_int_distribution<std::size_t> pick(0, synonyms.size() - 1);
      AuditEdit edit;
      edit.action = "synonym";
      edit.from = name;
      edit.to = synonyms[pick(rng)];
      sink.apply(rec, i, std::move(edit));
    }
  }
  eval.edit_count = sink.count;
  push_eval(audit, eval);
  return out;
}

// ---------------------------------------------------------------------------
// Round 3: remove irrelevant types
// ---------------------------------------------------------------------------

std::vector<AnnotatedSentence> remove_irrelevant(
    std::span<const AnnotatedSentence> ds, const DynCatConfig& cfg,
    AuditLog* audit) {
  std::vector<AnnotatedSentence> out(ds.begin(), ds.end());
  EditSink sink{3, audit};

  RoundEvaluation eval = evaluate_counts(out, cfg, 3, 0);
  eval.mean_cohesion = dataset_mean_cohesion(out, cfg);
  eval.cohesion_flag =
      eval.mean_cohesion && *eval.mean_cohesion < cfg.cohesion_low;
  double p = cfg.removal_probability;
  if (eval.entropy_flag) p *= cfg.damp_factor;   // keep lists rich when skewed
  if (eval.cohesion_flag) p *= cfg.damp_factor;  // diffuse categories: careful
  p = clamp01(p);
  eval.effective_probability = p;

  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& rec = out[i];
    auto rng = record_rng(cfg, rec.sentence.id, 3);
    std::set<std::string> gold;
    for (const auto& e : rec.entities)
      if (!e.label.is_unknown()) gold.insert(e.label.name());
    const auto names = rec.type_list.names;  // copy: edits mutate the list
    for (const auto& name : names) {
      if (gold.count(name)) continue;  // gold labels are never dropped
      if (!coin(rng, p)) continue;
      AuditEdit edit;
      edit.action = "remove";
      edit.from = name;
      sink.apply(rec, i, std::move(edit));
    }
  }
  eval.edit_count = sink.count;
  push_eval(audit, eval);
  return out;
}

// ---------------------------------------------------------------------------
// Round 4: merge rare types into Miscellaneous
// ---------------------------------------------------------------------------

std::vector<AnnotatedSentence> merge_miscellaneous(
    std::span<const AnnotatedSentence> ds, const Taxonomy&,
    const DynCatConfig& cfg, AuditLog* audit) {
  std::vector<AnnotatedSentence> out(ds.begin(), ds.end());
  EditSink sink{4, audit};

  RoundEvaluation eval = evaluate_counts(out, cfg, 4, 0);
  // The cohesion flag carries over from the last embedding-backed evaluation
  // (round 3); round 4 itself runs on counts alone.
  if (audit) {
    for (auto it = audit->evaluations.rbegin(); it != audit->evaluations.rend();
         ++it) {
      if (it->mean_cohesion) {
        eval.mean_cohesion = it->mean_cohesion;
        eval.cohesion_flag = it->cohesion_flag;
        break;
      }
    }
  }
  int raised = (eval.entropy_flag ? 1 : 0) + (eval.gini_flag ? 1 : 0) +
               (eval.cv_flag ? 1 : 0) + (eval.cohesion_flag ? 1 : 0);
  double p = cfg.merge_probability;
  for (int f = 0; f < raised; ++f) p *= cfg.boost_factor;
  p = clamp01(p);
  eval.effective_probability = p;

  // Rare categories: the smallest floor(q% * n) by global count, below the
  // mean only; seeded shuffle breaks count ties.
  auto counts = label_counts(out);
  std::set<std::string> rare;
  if (!counts.empty()) {
    auto dist = CategoryDistribution::from_counts(counts);
    const double mean = dist.mean();
    std::vector<std::pair<std::string, std::uint64_t>> order(counts.begin(),
                                                             counts.end());
    std::mt19937_64 tie_rng(splitmix64(cfg.seed ^ 0x4a7eull));
    std::shuffle(order.begin(), order.end(), tie_rng);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) {
                       return a.second < b.second;
                     });
    const auto quota = static_cast<std::size_t>(
        static_cast<double>(order.size()) * cfg.rare_percentile / 100.0);
    for (std::size_t k = 0; k < order.size() && rare.size() < quota; ++k) {
      if (static_cast<double>(order[k].second) >= mean) break;
      if (order[k].first == kMiscellaneousName) continue;
      rare.insert(order[k].first);
    }
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& rec = out[i];
    auto rng = record_rng(cfg, rec.sentence.id, 4);
    for (const auto& name : record_type_names(rec)) {
      if (!rare.count(name)) continue;
      if (!coin(rng, p)) continue;
      AuditEdit edit;
      edit.action = "merge";
      edit.from = name;
      edit.to = std::string(kMiscellaneousName);
      sink.apply(rec, i, std::move(edit));
    }
  }
  eval.edit_count = sink.count;
  push_eval(audit, eval);
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline, audit IO, replay
// ---------------------------------------------------------------------------

std::vector<AnnotatedSentence> DynCatResult::dataset() const {
  std::vector<AnnotatedSentence> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.record);
  return out;
}

DynCatResult run_dynamic_categorization(std::span<const AnnotatedSentence> ds,
                                        const Taxonomy& tax,
                                        const DynCatConfig& cfg) {
  DynCatResult result;
  auto stage1 = mix_granularities(ds, tax, cfg, &result.audit);
  auto stage2 = replace_synonyms(stage1, cfg, &result.audit);
  auto stage3 = remove_irrelevant(stage2, cfg, &result.audit);
  auto stage4 = merge_miscellaneous(stage3, tax, cfg, &result.audit);

  result.audit.final_metrics = evaluate_counts(stage4, cfg, 5, 0);
  result.audit.thresholds_attained = !result.audit.final_metrics.entropy_flag &&
                                     !result.audit.final_metrics.gini_flag &&
                                     !result.audit.final_metrics.cv_flag;

  std::map<std::string, std::vector<AuditEdit>> provenance;
  for (const auto& edit : result.audit.edits)
    provenance[edit.record_id].push_back(edit);
  result.records.reserve(stage4.size());
  for (auto& rec : stage4) {
    DynamicRecord dyn;
    dyn.provenance = provenance[rec.sentence.id];
    dyn.record = std::move(rec);
    result.records.push_back(std::move(dyn));
  }
  return result;
}

std::vector<AnnotatedSentence> replay_audit(
    std::span<const AnnotatedSentence> ds, const AuditLog& audit) {
  std::vector<AnnotatedSentence> out(ds.begin(), ds.end());
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < out.size(); ++i) by_id[out[i].sentence.id] = i;
  for (const auto& edit : audit.edits) {
    auto it = by_id.find(edit.record_id);
    if (it == by_id.end())
      throw ValidationError("audit edit names unknown record '" +
                            edit.record_id + "'");
    apply_edit(out[it->second], edit);
  }
  return out;
}

namespace {

json eval_to_json(const RoundEvaluation& e) {
  json j;
  j["round"] = e.round;
  j["pass"] = e.pass;
  j["entropy"] = e.entropy;
  j["gini"] = e.gini;
  j["cv"] = e.cv;
  j["entropy_flag"] = e.entropy_flag;
  j["gini_flag"] = e.gini_flag;
  j["cv_flag"] = e.cv_flag;
  if (e.mean_cohesion) j["mean_cohesion"] = *e.mean_cohesion;
  j["cohesion_flag"] = e.cohesion_flag;
  j["effective_probability"] = e.effective_probability;
  j["edit_count"] = e.edit_count;
  return j;
}

RoundEvaluation eval_from_json(const json& j) {
  RoundEvaluation e;
  e.round = j.at("round").get<int>();
  e.pass = j.at("pass").get<int>();
  e.entropy = j.at("entropy").get<double>();
  e.gini = j.at("gini").get<double>();
  e.cv = j.at("cv").get<double>();
  e.entropy_flag = j.at("entropy_flag").get<bool>();
  e.gini_flag = j.at("gini_flag").get<bool>();
  e.cv_flag = j.at("cv_flag").get<bool>();
  if (j.contains("mean_cohesion")) e.mean_cohesion = j["mean_cohesion"].get<double>();
  e.cohesion_flag = j.at("cohesion_flag").get<bool>();
  e.effective_probability = j.at("effective_probability").get<double>();
  e.edit_count = j.at("edit_count").get<std::size_t>();
  return e;
}

}  // namespace

void write_audit_log(const AuditLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write audit log " + path.string());
  for (const auto& e : log.evaluations) {
    json j = eval_to_json(e);
    j["type"] = "evaluation";
    out << j.dump() << '\n';
  }
  for (const auto& edit : log.edits) {
    json j;
    j["type"] = "edit";
    j["round"] = edit.round;
    j["record"] = edit.record_id;
    j["action"] = edit.action;
    j["from"] = edit.from;
    if (!edit.to.empty()) j["to"] = edit.to;
    if (!edit.level.empty()) j["level"] = edit.level;
    out << j.dump() << '\n';
  }
  json fin = eval_to_json(log.final_metrics);
  fin["type"] = "final";
  fin["thresholds_attained"] = log.thresholds_attained;
  out << fin.dump() << '\n';
}

AuditLog read_audit_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open audit log " + path.string());
  AuditLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("type"))
      throw ParseError("malformed audit entry", lineno);
    const std::string type = j["type"].get<std::string>();
    if (type == "evaluation") {
      log.evaluations.push_back(eval_from_json(j));
    } else if (type == "edit") {
      AuditEdit edit;
      edit.round = j.at("round").get<int>();
      edit.record_id = j.at("record").get<std::string>();
      edit.action = j.at("action").get<std::string>();
      edit.from = j.at("from").get<std::string>();
      edit.to = j.value("to", std::string());
      edit.level = j.value("level", std::string());
      log.edits.push_back(std::move(edit));
    } else if (type == "final") {
      log.final_metrics = eval_from_json(j);
      log.thresholds_attained = j.at("thresholds_attained").get<bool>();
    } else {
      throw ParseError("unknown audit entry type '" + type + "'", lineno);
    }
  }
  return log;
}

}  // namespace casner
