#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "casner/errors.hpp"
#include "casner/taxonomy.hpp"
#include "casner/utf8.hpp"
#include "casner/validate.hpp"
#include "testutil.hpp"

using namespace casner;
using namespace casner::testutil;

namespace {

Taxonomy shipped_taxonomy() {
  return load_taxonomy(std::string(CASNER_DATA_DIR) + "/dynamicner.tax");
}

}  // namespace

TEST_CASE("utf8 round trip and scalar offsets") {
  const std::string text = "aé中文b";  // mixed widths
  CHECK(utf8::length(text) == 5);
  CHECK(utf8::encode(utf8::decode(text)) == text);
  CHECK(utf8::slice(text, 1, 3) == "é中");
  CHECK(utf8::slice(text, 0, 0) == "");
  CHECK_THROWS_AS(utf8::slice(text, 2, 9), std::out_of_range);
  CHECK_THROWS_AS(utf8::decode("\xff\xfe"), ParseError);
  CHECK_THROWS_AS(utf8::decode(std::string("\xc3", 1)), ParseError);
}

TEST_CASE("shipped taxonomy has the full category system") {
  const Taxonomy tax = shipped_taxonomy();
  CHECK(tax.count(LabelLevel::Coarse) == 8);
  CHECK(tax.count(LabelLevel::Medium) == 31);
  CHECK(tax.count(LabelLevel::Fine) == 155);

  const TypeList person =
      tax.subcategories_of(Label("Person", LabelLevel::Coarse));
  CHECK(person.names == std::vector<std::string>{"Real Person", "Fictional Figure"});

  const TypeList real_person =
      tax.subcategories_of(Label("Real Person", LabelLevel::Medium));
  CHECK(real_person.names.size() == 11);
  CHECK(real_person.names.front() == "Politician");
  CHECK(real_person.names.back() == "Other Person");

  const TypeList leaf =
      tax.subcategories_of(Label("Politician", LabelLevel::Fine));
  CHECK(leaf.names.empty());

  CHECK_THROWS_AS(tax.subcategories_of(Label("Nonexistent", LabelLevel::Fine)),
                  UnknownNode);
}

TEST_CASE("taxonomy parent walks and level partition") {
  const Taxonomy tax = shipped_taxonomy();

  // Every non-coarse node reaches a coarse ancestor in at most two steps.
  for (const auto& node : tax.nodes()) {
    if (node.level == LabelLevel::Coarse) continue;
    Label label(node.name, node.level);
    auto up = tax.parent_of(label);
    REQUIRE(up.has_value());
    if (up->level() != LabelLevel::Coarse) {
      auto up2 = tax.parent_of(*up);
      REQUIRE(up2.has_value());
      CHECK(up2->level() == LabelLevel::Coarse);
    }
  }

  // Sibling children lists partition the next level.
  for (LabelLevel parent_level : {LabelLevel::Coarse, LabelLevel::Medium}) {
    const LabelLevel child_level = parent_level == LabelLevel::Coarse
                                       ? LabelLevel::Medium
                                       : LabelLevel::Fine;
    std::multiset<std::string> covered;
    for (const auto& name : tax.level_names(parent_level).names) {
      for (const auto& child :
           tax.subcategories_of(Label(name, parent_level)).names)
        covered.insert(child);
    }
    const auto expected = tax.level_names(child_level).names;
    CHECK(covered.size() == expected.size());  // disjoint: no duplicates
    for (const auto& name : expected) CHECK(covered.count(name) == 1);
  }

  // ancestor_at lifts fine labels to their coarse root.
  auto lifted =
      tax.ancestor_at(Label("Politician", LabelLevel::Fine), LabelLevel::Coarse);
  REQUIRE(lifted.has_value());
  CHECK(lifted->name() == "Person");
}

TEST_CASE("taxonomy parsing failures") {
  {
    std::istringstream in("coarse\tPerson\nfine\tPolitician\tNope\n");
    CHECK_THROWS_AS(Taxonomy::parse(in), IntegrityError);
  }
  {
    std::istringstream in("coarse\tPerson\ncoarse\tPerson\n");
    CHECK_THROWS_AS(Taxonomy::parse(in), IntegrityError);
  }
  {
    std::istringstream in("banana\tPerson\n");
    CHECK_THROWS_AS(Taxonomy::parse(in), ParseError);
  }
  {
    std::istringstream in("coarse\tPerson\tExtraField\n");
    CHECK_THROWS_AS(Taxonomy::parse(in), ParseError);
  }
  {  // degenerate single-node tree is valid
    std::istringstream in("# comment\ncoarse\tThing\n");
    const Taxonomy tax = Taxonomy::parse(in);
    CHECK(tax.count(LabelLevel::Coarse) == 1);
    CHECK(tax.count(LabelLevel::Medium) == 0);
    CHECK(tax.count(LabelLevel::Fine) == 0);
  }
}

TEST_CASE("validate_dataset reports every violation kind") {
  const Sentence s = make_sentence("s1", "Apple proposes new Macbook");

  SUBCASE("consistent fixture yields an empty report") {
    std::vector<AnnotatedSentence> ds{
        make_record(s, {{span_of(s, 0, 5), "ORG"}}, {"ORG", "PROD"}),
        make_record(make_sentence("s2", "AI wins"),
                    {{span_of(make_sentence("x", "AI wins"), 0, 2), "TECH"}},
                    {"TECH"}),
        make_record(make_sentence("s3", "nothing here"), {}, {"ORG"}),
    };
    CHECK(validate_dataset(ds).ok());
  }

  SUBCASE("surface mismatch") {
    auto rec = make_record(s, {{EntitySpan{0, 5, "Wrong"}, "ORG"}}, {"ORG"});
    const auto report = validate_dataset(std::vector<AnnotatedSentence>{rec});
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == "surface mismatch");
  }

  SUBCASE("overlap") {
    auto rec = make_record(
        s, {{span_of(s, 0, 5), "ORG"}, {span_of(s, 3, 8), "ORG"}}, {"ORG"});
    const auto report = validate_dataset(std::vector<AnnotatedSentence>{rec});
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == "overlap");
  }

  SUBCASE("span out of range") {
    auto rec = make_record(s, {}, {"ORG"});
    rec.entities.push_back({EntitySpan{20, 40, "x"}, Label("ORG", LabelLevel::Flat)});
    const auto report = validate_dataset(std::vector<AnnotatedSentence>{rec});
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == "span out of range");
  }

  SUBCASE("label not in type list") {
    auto rec = make_record(s, {{span_of(s, 0, 5), "LOC"}}, {"ORG"});
    const auto report = validate_dataset(std::vector<AnnotatedSentence>{rec});
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == "label not in type list");
  }

  SUBCASE("duplicate ids and unknown labels") {
    auto a = make_record(s, {}, {"ORG"});
    auto b = make_record(s, {}, {"ORG"});
    auto report = validate_dataset(std::vector<AnnotatedSentence>{a, b});
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == "duplicate id");

    auto c = make_record(make_sentence("s9", "Apple"), {}, {"ORG"}, LabelLevel::Flat,
                         true);
    c.entities.push_back({span_of(c.sentence, 0, 5), Label::unknown()});
    CHECK(validate_dataset(std::vector<AnnotatedSentence>{c}).ok());
  }
}
