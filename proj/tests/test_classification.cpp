#include <doctest.h>

#include <sstream>

#include "casner/classification.hpp"
#include "casner/errors.hpp"
#include "testutil.hpp"

using namespace casner;
using namespace casner::testutil;

namespace {

const Sentence kApple = make_sentence("apple", "Apple proposes new Macbook");

TypeList flat_types(bool allow_unknown = false) {
  return TypeList{{"Person", "Location", "Organization"}, allow_unknown};
}

ClassificationQuery apple_query(ClassificationMode mode,
                                bool allow_unknown = false) {
  return ClassificationQuery{render_marked(kApple, {span_of(kApple, 0, 5)}),
                             flat_types(allow_unknown), mode};
}

Taxonomy tiny_taxonomy() {
  std::istringstream in(
      "coarse\tPerson\n"
      "medium\tReal Person\tPerson\n"
      "fine\tPolitician\tReal Person\n"
      "fine\tArtist\tReal Person\n"
      "medium\tFictional Figure\tPerson\n"
      "coarse\tLocation\n");
  return Taxonomy::parse(in);
}

}  // namespace

TEST_CASE("classification prompt carries the type list and marked sentence") {
  SUBCASE("supervised prompt has no unknown suffix") {
    const auto messages =
        build_classification_prompt(apple_query(ClassificationMode::Supervised));
    REQUIRE(messages.size() == 2);
    const std::string& q = messages.back().content;
    CHECK(q.find("Person, Location, Organization") != std::string::npos);
    CHECK(q.find("##Apple## proposes new Macbook") != std::string::npos);
    CHECK(q.find(kUnknownSuffix) == std::string::npos);
  }
  SUBCASE("zero-shot prompt appends the exact suffix") {
    const auto messages =
        build_classification_prompt(apple_query(ClassificationMode::ZeroShot, true));
    CHECK(messages.back().content.find(kUnknownSuffix) != std::string::npos);
  }
  SUBCASE("demos render as prior turns") {
    const Sentence d = make_sentence("d", "AI wins");
    const ClassificationQuery dq{render_marked(d, {span_of(d, 0, 2)}),
                                 TypeList{{"Technology", "Person"}, false},
                                 ClassificationMode::Supervised};
    const std::vector<ClassificationDemo> demos{
        {dq, Label("Technology", LabelLevel::Flat)}};
    const auto messages = build_classification_prompt(
        apple_query(ClassificationMode::Supervised), demos);
    REQUIRE(messages.size() == 4);
    CHECK(messages[1].role == Role::User);
    CHECK(messages[1].content.find("##AI## wins") != std::string::npos);
    CHECK(messages[2].role == Role::Assistant);
    CHECK(messages[2].content == "Technology");
  }
  SUBCASE("a query with two regions is invalid") {
    ClassificationQuery q{
        render_marked(kApple, {span_of(kApple, 0, 5), span_of(kApple, 19, 26)}),
        flat_types(), ClassificationMode::Supervised};
    CHECK_THROWS_AS(build_classification_prompt(q), ValidationError);
  }
  SUBCASE("demo label must belong to its own list") {
    const std::vector<ClassificationDemo> demos{
        {apple_query(ClassificationMode::Supervised),
         Label("Banana", LabelLevel::Flat)}};
    CHECK_THROWS_AS(build_classification_prompt(
                        apple_query(ClassificationMode::Supervised), demos),
                    ValidationError);
  }
}

TEST_CASE("parse_label match cascade") {
  const TypeList tl = flat_types(true);

  CHECK(parse_label("location", tl).name() == "Location");
  CHECK(parse_label("  Location.\n", tl).name() == "Location");
  CHECK(parse_label("LOCATION", tl).name() == "Location");
  CHECK(parse_label("It is a Person.", tl).name() == "Person");  // rule 2
  CHECK(parse_label("unknown", tl).is_unknown());
  CHECK(parse_label("Unknown.", tl).is_unknown());

  // Rule 2 ambiguity and total misses fail.
  CHECK_THROWS_AS(parse_label("Person or Location?", tl), UnparseableLabel);
  CHECK_THROWS_AS(parse_label("banana", tl), UnparseableLabel);
  // Without the unknown escape, "unknown" itself is unparseable.
  CHECK_THROWS_AS(parse_label("unknown", flat_types(false)), UnparseableLabel);
}

TEST_CASE("classify_entity retries once on an unparseable answer") {
  const auto q = apple_query(ClassificationMode::Supervised);
  const auto messages = build_classification_prompt(q);

  SUBCASE("clean answer") {
    ScriptedChatBackend mock;
    mock.script(messages, "Organization");
    CHECK(classify_entity(mock, q).name() == "Organization");
  }
  SUBCASE("garbage then a listed name") {
    ScriptedChatBackend mock;
    mock.script(messages, "mumble");
    auto retry = messages;
    retry.push_back(assistant_message("mumble"));
    retry.push_back(
        user_message("Answer with exactly one of the listed type names."));
    mock.script(retry, "Organization");
    CHECK(classify_entity(mock, q).name() == "Organization");
  }
  SUBCASE("garbage twice") {
    ScriptedChatBackend mock;
    mock.script(messages, "mumble");
    auto retry = messages;
    retry.push_back(assistant_message("mumble"));
    retry.push_back(
        user_message("Answer with exactly one of the listed type names."));
    mock.script(retry, "still mumble");
    CHECK_THROWS_AS(classify_entity(mock, q), UnparseableLabel);
  }
  SUBCASE("zero-shot unknown answer") {
    const auto zq = apple_query(ClassificationMode::ZeroShot, true);
    ScriptedChatBackend mock;
    mock.script(build_classification_prompt(zq), "unknown");
    CHECK(classify_entity(mock, zq).is_unknown());
  }
}

TEST_CASE("classify_progressive descends the taxonomy") {
  const Taxonomy tax = tiny_taxonomy();
  const MarkedText marked = render_marked(kApple, {span_of(kApple, 0, 5)});

  auto script_level = [&](ScriptedChatBackend& mock, const TypeList& list,
                          ClassificationMode mode, const std::string& answer) {
    TypeList with_flag = list;
    with_flag.allow_unknown = mode == ClassificationMode::ZeroShot;
    ClassificationQuery q{marked, with_flag, mode};
    mock.script(build_classification_prompt(q), answer);
  };

  SUBCASE("full path to a leaf") {
    ScriptedChatBackend mock;
    const auto mode = ClassificationMode::Supervised;
    script_level(mock, tax.level_names(LabelLevel::Coarse), mode, "Person");
    script_level(mock, tax.subcategories_of(Label("Person", LabelLevel::Coarse)),
                 mode, "Real Person");
    script_level(mock,
                 tax.subcategories_of(Label("Real Person", LabelLevel::Medium)),
                 mode, "Politician");
    const auto path = classify_progressive(mock, marked, tax, mode);
    REQUIRE(path.size() == 3);
    CHECK(path[0] == Label("Person", LabelLevel::Coarse));
    CHECK(path[1] == Label("Real Person", LabelLevel::Medium));
    CHECK(path[2] == Label("Politician", LabelLevel::Fine));
  }
  SUBCASE("unknown at the coarse level stops the walk") {
    ScriptedChatBackend mock;
    const auto mode = ClassificationMode::ZeroShot;
    script_level(mock, tax.level_names(LabelLevel::Coarse), mode, "unknown");
    const auto path = classify_progressive(mock, marked, tax, mode);
    REQUIRE(path.size() == 1);
    CHECK(path[0].is_unknown());
  }
  SUBCASE("a node without children ends the descent") {
    ScriptedChatBackend mock;
    const auto mode = ClassificationMode::Supervised;
    script_level(mock, tax.level_names(LabelLevel::Coarse), mode, "Location");
    const auto path = classify_progressive(mock, marked, tax, mode);
    REQUIRE(path.size() == 1);
    CHECK(path[0] == Label("Location", LabelLevel::Coarse));
  }
  SUBCASE("taxonomy-path consistency") {
    ScriptedChatBackend mock;
    const auto mode = ClassificationMode::Supervised;
    script_level(mock, tax.level_names(LabelLevel::Coarse), mode, "Person");
    script_level(mock, tax.subcategories_of(Label("Person", LabelLevel::Coarse)),
                 mode, "Fictional Figure");
    const auto path = classify_progressive(mock, marked, tax, mode);
    REQUIRE(path.size() == 2);
    for (std::size_t i = 1; i < path.size(); ++i) {
      auto parent = tax.parent_of(path[i]);
      REQUIRE(parent.has_value());
      CHECK(*parent == path[i - 1]);
    }
  }
}
