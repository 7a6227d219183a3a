#include <doctest.h>

#include <fstream>
#include <set>

#include "casner/dataio.hpp"
#include "casner/dyncat.hpp"
#include "casner/errors.hpp"
#include "casner/validate.hpp"
#include "testutil.hpp"

using namespace casner;
using namespace casner::testutil;

namespace {

Taxonomy shipped_taxonomy() {
  return load_taxonomy(std::string(CASNER_DATA_DIR) + "/dynamicner.tax");
}

// A record with one fine-labeled entity plus distractor list entries.
AnnotatedSentence fine_record(const std::string& id, const std::string& label,
                              std::vector<std::string> distractors) {
  Sentence s = make_sentence(id, "entity mention in context");
  auto rec = make_record(s, {}, {});
  rec.entities.push_back({span_of(s, 0, 6), Label(label, LabelLevel::Fine)});
  rec.type_list.names.push_back(label);
  for (auto& d : distractors)
    if (d != label) rec.type_list.names.push_back(std::move(d));
  return rec;
}

bool label_consistent(const std::vector<AnnotatedSentence>& ds) {
  for (const auto& rec : ds)
    for (const auto& e : rec.entities)
      if (!e.label.is_unknown() && !rec.type_list.contains(e.label.name()))
        return false;
  return true;
}

std::set<std::string> all_type_names(const std::vector<AnnotatedSentence>& ds) {
  std::set<std::string> names;
  for (const auto& rec : ds) {
    for (const auto& n : rec.type_list.names) names.insert(n);
    for (const auto& e : rec.entities)
      if (!e.label.is_unknown()) names.insert(e.label.name());
  }
  return names;
}

std::vector<AnnotatedSentence> mixed_fixture(int per_category = 4) {
  const std::vector<std::string> labels{
      "Politician", "Artist",  "Author",   "Athlete",  "City",
      "Country",    "Company", "Software", "Disease",  "Species",
      "Song",       "Film",    "Hospital", "Airport",  "Element",
      "Algorithm",  "Desert",  "Band",     "Law",      "Protein"};
  const std::vector<std::string> distractors{"Politician", "City", "Company",
                                             "Software", "Song"};
  std::vector<AnnotatedSentence> ds;
  int n = 0;
  for (const auto& label : labels)
    for (int i = 0; i < per_category; ++i)
      ds.push_back(fine_record("r" + std::to_string(n++), label, distractors));
  return ds;
}

}  // namespace

TEST_CASE("synonym table parsing") {
  const auto dir = scratch_dir("syn");
  {
    std::ofstream out(dir / "syn.tsv");
    out << "# comment\n"
        << "Politician\tPolitical Figure|Statesperson\n"
        << "City\tTown\n";
  }
  const auto table = load_synonym_table(dir / "syn.tsv");
  REQUIRE(table.size() == 2);
  CHECK(table.at("Politician") ==
        std::vector<std::string>{"Political Figure", "Statesperson"});
  {
    std::ofstream out(dir / "bad.tsv");
    out << "NoTabHere\n";
  }
  CHECK_THROWS_AS(load_synonym_table(dir / "bad.tsv"), ParseError);
}

TEST_CASE("mix_granularities lifts labels with their list entries") {
  const Taxonomy tax = shipped_taxonomy();
  DynCatConfig cfg;
  cfg.seed = 7;

  SUBCASE("probability 1 lifts every liftable name") {
    cfg.mix_probability = 1.0;
    const auto ds = std::vector<AnnotatedSentence>{
        fine_record("r0", "Politician", {"City"})};
    const auto out = mix_granularities(ds, tax, cfg);
    REQUIRE(out.size() == 1);
    const auto& rec = out[0];
    // "Politician" lifted to "Real Person" or "Person"; never left behind.
    CHECK_FALSE(rec.type_list.contains("Politician"));
    const std::string lifted = rec.entities[0].label.name();
    CHECK((lifted == "Real Person" || lifted == "Person"));
    CHECK(rec.type_list.contains(lifted));
    CHECK(label_consistent(out));
  }
  SUBCASE("probability 0 is the identity") {
    cfg.mix_probability = 0.0;
    cfg.max_rebalance_passes = 0;
    const auto ds = mixed_fixture();
    const auto out = mix_granularities(ds, tax, cfg);
    REQUIRE(out.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(out[i].type_list.names == ds[i].type_list.names);
      CHECK(out[i].entities[0].label == ds[i].entities[0].label);
    }
  }
  SUBCASE("label-consistency holds after the round") {
    cfg.mix_probability = 0.5;
    const auto out = mix_granularities(mixed_fixture(), tax, cfg);
    CHECK(label_consistent(out));
  }
  SUBCASE("unresolvable labels are rejected") {
    auto ds = mixed_fixture(1);
    ds[0].entities[0].label = Label("NotAType", LabelLevel::Fine);
    ds[0].type_list.names.push_back("NotAType");
    CHECK_THROWS_AS(mix_granularities(ds, tax, cfg), UnresolvableLabel);
  }
}

TEST_CASE("replace_synonyms rewrites lists and labels jointly") {
  DynCatConfig cfg;
  cfg.seed = 3;
  cfg.synonym_table["Politician"] = {"Political Figure"};

  SUBCASE("table hit renames both label and list entry") {
    cfg.synonym_probability = 1.0;
    const auto ds =
        std::vector<AnnotatedSentence>{fine_record("r0", "Politician", {"City"})};
    const auto out = replace_synonyms(ds, cfg);
    CHECK(out[0].entities[0].label.name() == "Political Figure");
    CHECK(out[0].type_list.contains("Political Figure"));
    CHECK_FALSE(out[0].type_list.contains("Politician"));
    CHECK(out[0].type_list.contains("City"));  // untouched: not in the table
    CHECK(label_consistent(out));
  }
  SUBCASE("empty table is the identity") {
    cfg.synonym_table.clear();
    cfg.synonym_probability = 1.0;
    const auto ds = mixed_fixture();
    const auto out = replace_synonyms(ds, cfg);
    for (std::size_t i = 0; i < ds.size(); ++i)
      CHECK(out[i].type_list.names == ds[i].type_list.names);
  }
  SUBCASE("same seed, same output") {
    cfg.synonym_probability = 0.5;
    cfg.synonym_table["City"] = {"Town", "Municipality"};
    const auto ds = mixed_fixture();
    const auto a = replace_synonyms(ds, cfg);
    const auto b = replace_synonyms(ds, cfg);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i].type_list.names == b[i].type_list.names);
  }
}

TEST_CASE("remove_irrelevant never drops gold labels") {
  DynCatConfig cfg;
  cfg.seed = 11;

  SUBCASE("probability 1 leaves exactly the gold set") {
    cfg.removal_probability = 1.0;
    std::vector<std::string> ten;
    for (int i = 0; i < 10; ++i) ten.push_back("T" + std::to_string(i));
    auto rec = fine_record("r0", "Politician", ten);
    const auto out =
        remove_irrelevant(std::vector<AnnotatedSentence>{rec}, cfg);
    CHECK(out[0].type_list.names == std::vector<std::string>{"Politician"});
  }
  SUBCASE("probability 0 is the identity") {
    cfg.removal_probability = 0.0;
    const auto ds = mixed_fixture();
    const auto out = remove_irrelevant(ds, cfg);
    for (std::size_t i = 0; i < ds.size(); ++i)
      CHECK(out[i].type_list.names == ds[i].type_list.names);
  }
  SUBCASE("gold always survives random removal") {
    cfg.removal_probability = 0.7;
    const auto out = remove_irrelevant(mixed_fixture(), cfg);
    CHECK(label_consistent(out));
  }
}

TEST_CASE("merge_miscellaneous folds rare types into the sentinel") {
  const Taxonomy tax = shipped_taxonomy();
  DynCatConfig cfg;
  cfg.seed = 13;
  cfg.merge_probability = 1.0;
  cfg.rare_percentile = 40.0;

  // Two rare categories against several populous ones.
  std::vector<AnnotatedSentence> ds;
  int n = 0;
  for (int i = 0; i < 12; ++i)
    ds.push_back(fine_record("a" + std::to_string(n++), "Politician", {}));
  for (int i = 0; i < 12; ++i)
    ds.push_back(fine_record("b" + std::to_string(n++), "City", {}));
  for (int i = 0; i < 12; ++i)
    ds.push_back(fine_record("c" + std::to_string(n++), "Company", {}));
  for (int i = 0; i < 12; ++i)
    ds.push_back(fine_record("d" + std::to_string(n++), "Software", {}));
  ds.push_back(fine_record("rare1", "Desert", {"Law"}));
  ds.back().entities.push_back(
      {span_of(ds.back().sentence, 7, 14), Label("Law", LabelLevel::Fine)});
  ds.back().type_list.names.push_back("Desert");
  // Reorder: list currently [Desert, Law, Desert] — construction dedups.
  ds.back().type_list.names = {"Desert", "Law"};

  const auto out = merge_miscellaneous(ds, tax, cfg);
  const auto& rare = out.back();
  CHECK(rare.entities[0].label.name() == kMiscellaneousName);
  CHECK(rare.entities[1].label.name() == kMiscellaneousName);
  int misc_entries = 0;
  for (const auto& t : rare.type_list.names)
    if (t == kMiscellaneousName) ++misc_entries;
  CHECK(misc_entries == 1);  // sentinel appears once
  CHECK(label_consistent(out));

  SUBCASE("balanced corpora see no rare set") {
    const auto balanced = mixed_fixture();
    const auto unchanged = merge_miscellaneous(balanced, tax, cfg);
    for (std::size_t i = 0; i < balanced.size(); ++i)
      CHECK(unchanged[i].type_list.names == balanced[i].type_list.names);
  }
}

TEST_CASE("run_dynamic_categorization composes the four rounds") {
  const Taxonomy tax = shipped_taxonomy();
  DynCatConfig cfg;
  cfg.seed = 42;
  cfg.synonym_table["Politician"] = {"Political Figure"};
  cfg.synonym_table["City"] = {"Town"};
  cfg.mix_probability = 0.3;
  cfg.synonym_probability = 0.4;
  cfg.removal_probability = 0.5;
  cfg.merge_probability = 0.3;
  HashEmbeddingBackend emb(16);
  cfg.embeddings = &emb;

  const auto ds = mixed_fixture(6);
  const auto result = run_dynamic_categorization(ds, tax, cfg);

  SUBCASE("round order is recorded in the audit log") {
    REQUIRE(result.audit.evaluations.size() >= 4);
    int last_round = 0;
    for (const auto& eval : result.audit.evaluations) {
      CHECK(eval.round >= last_round);
      last_round = eval.round;
    }
    CHECK(result.audit.evaluations.front().round == 1);
    CHECK(last_round == 4);
    for (const auto& edit : result.audit.edits)
      CHECK((edit.round >= 1 && edit.round <= 4));
  }
  SUBCASE("label consistency holds for every record") {
    CHECK(label_consistent(result.dataset()));
  }
  SUBCASE("deterministic under a fixed seed") {
    const auto again = run_dynamic_categorization(ds, tax, cfg);
    const auto a = result.dataset();
    const auto b = again.dataset();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].type_list.names == b[i].type_list.names);
      CHECK(a[i].entities[0].label == b[i].entities[0].label);
    }
    CHECK(result.audit.edits.size() == again.audit.edits.size());
  }
  SUBCASE("provenance replays to the identical output") {
    const auto replayed = replay_audit(ds, result.audit);
    const auto expect = result.dataset();
    REQUIRE(replayed.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(replayed[i].type_list.names == expect[i].type_list.names);
      REQUIRE(replayed[i].entities.size() == expect[i].entities.size());
      for (std::size_t e = 0; e < expect[i].entities.size(); ++e)
        CHECK(replayed[i].entities[e].label == expect[i].entities[e].label);
    }
  }
  SUBCASE("per-record provenance matches the global edit stream") {
    std::size_t total = 0;
    for (const auto& rec : result.records) {
      total += rec.provenance.size();
      for (const auto& edit : rec.provenance)
        CHECK(edit.record_id == rec.record.sentence.id);
    }
    CHECK(total == result.audit.edits.size());
  }
  SUBCASE("dyncat is subtractive: no new entities, no invented names") {
    const auto out = result.dataset();
    REQUIRE(out.size() == ds.size());
    std::set<std::string> allowed;
    for (const auto& node : tax.nodes()) allowed.insert(node.name);
    for (const auto& [name, synonyms] : cfg.synonym_table)
      for (const auto& s : synonyms) allowed.insert(s);
    allowed.insert(std::string(kMiscellaneousName));
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].entities.size() <= ds[i].entities.size());
      for (const auto& name : all_type_names({out[i]}))
        CHECK(allowed.count(name) == 1);
    }
  }
  SUBCASE("audit log round-trips through its file format") {
    const auto dir = scratch_dir("audit");
    write_audit_log(result.audit, dir / "audit.jsonl");
    const auto loaded = read_audit_log(dir / "audit.jsonl");
    CHECK(loaded.edits.size() == result.audit.edits.size());
    CHECK(loaded.evaluations.size() == result.audit.evaluations.size());
    CHECK(loaded.thresholds_attained == result.audit.thresholds_attained);
    const auto replayed = replay_audit(ds, loaded);
    const auto expect = result.dataset();
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(replayed[i].type_list.names == expect[i].type_list.names);
  }
}

TEST_CASE("an already balanced corpus converges with minimal edits") {
  const Taxonomy tax = shipped_taxonomy();
  DynCatConfig cfg;
  cfg.seed = 1;
  cfg.mix_probability = 0.2;
  cfg.synonym_probability = 0.0;
  cfg.removal_probability = 0.3;
  cfg.merge_probability = 0.2;

  const auto ds = mixed_fixture(10);
  const auto result = run_dynamic_categorization(ds, tax, cfg);
  for (const auto& eval : result.audit.evaluations) {
    if (eval.round == 1 && eval.pass == 0) {
      CHECK_FALSE(eval.entropy_flag);
      CHECK_FALSE(eval.gini_flag);
      CHECK_FALSE(eval.cv_flag);
    }
  }
  // Balanced input never triggers rebalancing passes.
  for (const auto& eval : result.audit.evaluations)
    if (eval.round == 1) CHECK(eval.pass == 0);
}
