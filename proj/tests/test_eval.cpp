#include <doctest.h>

#include <cmath>

#include "casner/errors.hpp"
#include "casner/eval.hpp"
#include "testutil.hpp"

using namespace casner;
using namespace casner::testutil;

namespace {

AnnotatedSentence gold_apple() {
  Sentence s = make_sentence("s1", "Apple proposes new Macbook");
  return make_record(
      s, {{span_of(s, 0, 5), "ORG"}, {span_of(s, 19, 26), "PROD"}},
      {"ORG", "PROD"});
}

}  // namespace

TEST_CASE("score_spans strict matching") {
  const auto gold = gold_apple();

  SUBCASE("identical prediction scores perfectly") {
    const std::vector<AnnotatedSentence> p{gold}, g{gold};
    const auto s = score_spans(p, g);
    CHECK(s.precision() == doctest::Approx(1.0));
    CHECK(s.recall() == doctest::Approx(1.0));
    CHECK(s.f1() == doctest::Approx(1.0));
  }
  SUBCASE("one of two entities found") {
    auto pred = gold;
    pred.entities.resize(1);
    const std::vector<AnnotatedSentence> p{pred}, g{gold};
    const auto s = score_spans(p, g);
    CHECK(s.precision() == doctest::Approx(1.0));
    CHECK(s.recall() == doctest::Approx(0.5));
    CHECK(s.f1() == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("wrong label is both a false positive and a miss") {
    auto pred = gold;
    pred.entities[0].label = Label("PROD", LabelLevel::Flat);
    const std::vector<AnnotatedSentence> p{pred}, g{gold};
    const auto s = score_spans(p, g);
    CHECK(s.tp == 1);
    CHECK(s.fp == 1);
    CHECK(s.fn == 1);
  }
  SUBCASE("duplicate prediction matches a gold entity only once") {
    auto pred = gold;
    pred.entities.push_back(pred.entities[0]);
    const std::vector<AnnotatedSentence> p{pred}, g{gold};
    const auto s = score_spans(p, g);
    CHECK(s.tp == 2);
    CHECK(s.fp == 1);
  }
  SUBCASE("id mismatch fails alignment") {
    auto pred = gold;
    pred.sentence.id = "other";
    const std::vector<AnnotatedSentence> p{pred}, g{gold};
    CHECK_THROWS_AS(score_spans(p, g), AlignmentError);
  }
}

TEST_CASE("unknown policy") {
  const auto gold = gold_apple();
  auto pred = gold;
  pred.entities[0].label = Label::unknown();

  SUBCASE("drop equals deleting unknown predictions beforehand") {
    const std::vector<AnnotatedSentence> p{pred}, g{gold};
    const auto dropped = score_spans(p, g, UnknownPolicy::Drop);
    auto scrubbed = pred;
    scrubbed.entities.erase(scrubbed.entities.begin());
    const std::vector<AnnotatedSentence> ps{scrubbed};
    const auto manual = score_spans(ps, g, UnknownPolicy::Drop);
    CHECK(dropped.tp == manual.tp);
    CHECK(dropped.fp == manual.fp);
    CHECK(dropped.fn == manual.fn);
  }
  SUBCASE("count-as-fp penalizes the unknown span") {
    const std::vector<AnnotatedSentence> p{pred}, g{gold};
    const auto s = score_spans(p, g, UnknownPolicy::CountAsFalsePositive);
    CHECK(s.tp == 1);
    CHECK(s.fp == 1);
    CHECK(s.fn == 1);
  }
}

TEST_CASE("extraction_scores ignore labels") {
  const auto gold = gold_apple();
  auto pred = gold;
  pred.entities[0].label = Label("WRONG", LabelLevel::Flat);
  // Plus one spurious span.
  pred.entities.push_back(
      {span_of(pred.sentence, 6, 14), Label("X", LabelLevel::Flat)});
  const std::vector<AnnotatedSentence> p{pred}, g{gold};
  const auto s = extraction_scores(p, g);
  CHECK(s.recall() == doctest::Approx(1.0));
  CHECK(s.precision() == doctest::Approx(2.0 / 3.0));

  SUBCASE("empty predictions score zero, not NaN") {
    auto none = gold;
    none.entities.clear();
    const std::vector<AnnotatedSentence> pn{none};
    const auto z = extraction_scores(pn, g);
    CHECK(z.precision() == 0.0);
    CHECK(z.recall() == 0.0);
    CHECK(z.f1() == 0.0);
  }
}

TEST_CASE("f1 is the harmonic mean, checked against the published triple") {
  // Precision 98.4, recall 93.6 must print as 95.9 at one decimal.
  const double f1 = f1_score(98.4, 93.6);
  CHECK(std::round(f1 * 10.0) / 10.0 == doctest::Approx(95.9));
  CHECK(f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("classifier accuracy") {
  using P = std::pair<Label, Label>;
  const Label a("A", LabelLevel::Flat), b("B", LabelLevel::Flat);
  std::vector<P> all_correct(4, {a, a});
  CHECK(classifier_accuracy(all_correct) == doctest::Approx(1.0));
  std::vector<P> half;
  for (int i = 0; i < 5; ++i) half.push_back({a, a});
  for (int i = 0; i < 5; ++i) half.push_back({a, b});
  CHECK(classifier_accuracy(half) == doctest::Approx(0.5));
  CHECK(classifier_accuracy(std::vector<P>{{Label::unknown(), Label::unknown()}}) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(classifier_accuracy({}), EmptyInput);
}

TEST_CASE("aggregate_report groups and stays self-consistent") {
  auto gold_en = gold_apple();
  Sentence zh = make_sentence("z1", "北京很大", "zh");
  auto gold_zh = make_record(zh, {{span_of(zh, 0, 2), "LOC"}}, {"LOC"});

  SUBCASE("single language yields that language's rows") {
    const std::vector<AnnotatedSentence> p{gold_en}, g{gold_en};
    const auto report = aggregate_report(evaluate_to_rows(p, g));
    for (const auto& row : report.rows) CHECK(row.language == "en");
    CHECK(report.overall.tp == 2);
  }
  SUBCASE("two languages yield per-language rows plus overall") {
    const std::vector<AnnotatedSentence> p{gold_en, gold_zh},
        g{gold_en, gold_zh};
    const auto report = aggregate_report(evaluate_to_rows(p, g));
    bool has_en = false, has_zh = false;
    for (const auto& row : report.rows) {
      if (row.language == "en") has_en = true;
      if (row.language == "zh") has_zh = true;
    }
    CHECK(has_en);
    CHECK(has_zh);
    CHECK(report.overall.tp == 3);
    CHECK(report.macro_categories == 3);  // ORG, PROD, LOC
  }
  SUBCASE("empty groups are omitted") {
    const std::vector<EvalRow> rows{{"en", "", "ORG", {0, 0, 0}},
                                    {"en", "", "LOC", {3, 1, 0}}};
    const auto report = aggregate_report(rows);
    REQUIRE(report.rows.size() == 2);  // category row + language rollup
    CHECK(report.rows[0].category == "LOC");
  }
  SUBCASE("every emitted row satisfies F1 = 2PR/(P+R)") {
    const std::vector<AnnotatedSentence> p{gold_en, gold_zh},
        g{gold_en, gold_zh};
    auto pred = p;
    pred[0].entities[0].label = Label("PROD", LabelLevel::Flat);  // break one
    const auto report = aggregate_report(evaluate_to_rows(pred, g));
    for (const auto& row : report.rows) {
      const double expected = f1_score(row.scores.precision(), row.scores.recall());
      CHECK(row.scores.f1() == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("scoring is symmetric under sentence reordering") {
  auto gold_en = gold_apple();
  Sentence zh = make_sentence("z1", "北京很大", "zh");
  auto gold_zh = make_record(zh, {{span_of(zh, 0, 2), "LOC"}}, {"LOC"});
  const std::vector<AnnotatedSentence> g{gold_en, gold_zh};
  const std::vector<AnnotatedSentence> p_fwd{gold_en, gold_zh};
  const std::vector<AnnotatedSentence> p_rev{gold_zh, gold_en};
  const auto a = score_spans(p_fwd, g);
  const auto b = score_spans(p_rev, g);
  CHECK(a.tp == b.tp);
  CHECK(a.fp == b.fp);
  CHECK(a.fn == b.fn);
}
