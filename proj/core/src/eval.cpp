#include "casner/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "casner/errors.hpp"

namespace casner {

using nlohmann::json;

double f1_score(double precision, double recall) {
  return precision + recall == 0.0
             ? 0.0
             : 2.0 * precision * recall / (precision + recall);
}

namespace {

struct EntityKey {
  std::size_t start, end;
  std::string label;  // empty when labels are ignored
  std::string level;

  auto operator<=>(const EntityKey&) const = default;
};

EntityKey key_of(const Entity& e, bool with_label) {
  EntityKey k{e.span.start, e.span.end, "", ""};
  if (with_label && !e.label.is_unknown()) {
    k.label = e.label.name();
    k.level = std::string(level_name(e.label.level()));
  }
  return k;
}

// Greedy exact matching: each gold entity is consumed by at most one
// prediction.
Scores score_sentence(const std::vector<Entity>& pred,
                      const std::vector<Entity>& gold, bool with_label,
                      UnknownPolicy policy) {
  std::multiset<EntityKey> unmatched;
  for (const auto& g : gold) unmatched.insert(key_of(g, with_label));
  Scores s;
  for (const auto& p : pred) {
    if (with_label && p.label.is_unknown()) {
      if (policy == UnknownPolicy::Drop) continue;
      ++s.fp;  // Unknown never matches a gold label
      continue;
    }
    auto it = unmatched.find(key_of(p, with_label));
    if (it != unmatched.end()) {
      unmatched.erase(it);
      ++s.tp;
    } else {
      ++s.fp;
    }
  }
  s.fn = unmatched.size();
  return s;
}

Scores score_all(std::span<const AnnotatedSentence> pred,
                 std::span<const AnnotatedSentence> gold, bool with_label,
                 UnknownPolicy policy) {
  if (pred.size() != gold.size())
    throw AlignmentError("prediction and gold corpora differ in size: " +
                         std::to_string(pred.size()) + " vs " +
                         std::to_string(gold.size()));
  std::map<std::string, const AnnotatedSentence*> gold_by_id;
  for (const auto& g : gold) gold_by_id[g.sentence.id] = &g;
  Scores total;
  for (const auto& p : pred) {
    auto it = gold_by_id.find(p.sentence.id);
    if (it == gold_by_id.end())
      throw AlignmentError("prediction id '" + p.sentence.id +
                           "' has no gold sentence");
    total += score_sentence(p.entities, it->second->entities, with_label, policy);
  }
  return total;
}

}  // namespace

Scores score_spans(std::span<const AnnotatedSentence> pred,
                   std::span<const AnnotatedSentence> gold,
                   UnknownPolicy policy) {
  return score_all(pred, gold, /*with_label=*/true, policy);
}

Scores extraction_scores(std::span<const AnnotatedSentence> pred,
                         std::span<const AnnotatedSentence> gold) {
  return score_all(pred, gold, /*with_label=*/false, UnknownPolicy::Drop);
}

double classifier_accuracy(std::span<const std::pair<Label, Label>> preds) {
  if (preds.empty())
    throw EmptyInput("classifier accuracy over an empty prediction list");
  std::size_t hits = 0;
  for (const auto& [p, g] : preds)
    if (p == g) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

namespace {

// Lifts every entity label to `level`; entities whose label is already
// coarser (or off-taxonomy) are dropped from that granularity's view.
std::vector<AnnotatedSentence> lift_to_level(
    std::span<const AnnotatedSentence> ds, const Taxonomy& tax,
    LabelLevel level) {
  std::vector<AnnotatedSentence> out;
  out.reserve(ds.size());
  for (const auto& rec : ds) {
    AnnotatedSentence lifted = rec;
    lifted.entities.clear();
    for (const auto& e : rec.entities) {
      if (e.label.is_unknown()) {
        lifted.entities.push_back(e);
        continue;
      }
      try {
        if (auto up = tax.ancestor_at(e.label, level)) {
          Entity moved = e;
          moved.label = *up;
          lifted.entities.push_back(std::move(moved));
        }
      } catch (const UnknownNode&) {
        // off-taxonomy label: not visible at this granularity
      }
    }
    out.push_back(std::move(lifted));
  }
  return out;
}

std::vector<EvalRow> rows_for(std::span<const AnnotatedSentence> pred,
                              std::span<const AnnotatedSentence> gold,
                              UnknownPolicy policy,
                              const std::string& granularity) {
  // Per (language, category) counts. Category attribution: TP and FN follow
  // the gold label, FP follows the predicted label.
  std::map<std::pair<std::string, std::string>, Scores> acc;
  std::map<std::string, const AnnotatedSentence*> gold_by_id;
  for (const auto& g : gold) gold_by_id[g.sentence.id] = &g;
  for (const auto& p : pred) {
    auto it = gold_by_id.find(p.sentence.id);
    if (it == gold_by_id.end())
      throw AlignmentError("prediction id '" + p.sentence.id +
                           "' has no gold sentence");
    const auto& g = *it->second;
    const std::string& lang = g.sentence.language;

    std::multiset<EntityKey> unmatched;
    std::map<EntityKey, std::string> gold_label_of;
    for (const auto& ge : g.entities) {
      auto k = key_of(ge, true);
      unmatched.insert(k);
      gold_label_of[k] = ge.label.is_unknown() ? "unknown" : ge.label.name();
    }
    for (const auto& pe : p.entities) {
      if (pe.label.is_unknown()) {
        if (policy == UnknownPolicy::Drop) continue;
        ++acc[{lang, "unknown"}].fp;
        continue;
      }
      auto k = key_of(pe, true);
      auto u = unmatched.find(k);
      if (u != unmatched.end()) {
        unmatched.erase(u);
        ++acc[{lang, pe.label.name()}].tp;
      } else {
        ++acc[{lang, pe.label.name()}].fp;
      }
    }
    for (const auto& k : unmatched) ++acc[{lang, gold_label_of[k]}].fn;
  }
  std::vector<EvalRow> rows;
  for (const auto& [key, scores] : acc)
    rows.push_back({key.first, granularity, key.second, scores});
  return rows;
}

}  // namespace

std::vector<EvalRow> evaluate_to_rows(std::span<const AnnotatedSentence> pred,
                                      std::span<const AnnotatedSentence> gold,
                                      UnknownPolicy policy,
                                      const Taxonomy* tax) {
  std::vector<EvalRow> rows = rows_for(pred, gold, policy, "");
  if (tax) {
    for (LabelLevel level :
         {LabelLevel::Coarse, LabelLevel::Medium, LabelLevel::Fine}) {
      auto lifted_pred = lift_to_level(pred, *tax, level);
      auto lifted_gold = lift_to_level(gold, *tax, level);
      auto level_rows = rows_for(lifted_pred, lifted_gold, policy,
                                 std::string(level_name(level)));
      rows.insert(rows.end(), level_rows.begin(), level_rows.end());
    }
  }
  return rows;
}

EvalReport aggregate_report(std::span<const EvalRow> rows) {
  EvalReport report;
  std::map<std::tuple<std::string, std::string, std::string>, Scores> grouped;
  for (const auto& row : rows) {
    if (row.scores.tp + row.scores.fp + row.scores.fn == 0) continue;  // empty
    grouped[{row.language, row.granularity, row.category}] += row.scores;
  }
  std::map<std::pair<std::string, std::string>, Scores> by_language;
  double mp = 0.0, mr = 0.0, mf = 0.0;
  std::size_t m = 0;
  for (const auto& [key, scores] : grouped) {
    report.rows.push_back(
        {std::get<0>(key), std::get<1>(key), std::get<2>(key), scores});
    by_language[{std::get<0>(key), std::get<1>(key)}] += scores;
    if (std::get<1>(key).empty()) {  // as-recorded rows drive macro + overall
      mp += scores.precision();
      mr += scores.recall();
      mf += scores.f1();
      ++m;
      report.overall += scores;
    }
  }
  for (const auto& [key, scores] : by_language)
    report.rows.push_back({key.first, key.second, "", scores});
  if (m) {
    report.macro_precision = mp / static_cast<double>(m);
    report.macro_recall = mr / static_cast<double>(m);
    report.macro_f1 = mf / static_cast<double>(m);
    report.macro_categories = m;
  }
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  json j;
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"language", row.language},
                    {"granularity", row.granularity},
                    {"category", row.category},
                    {"tp", row.scores.tp},
                    {"fp", row.scores.fp},
                    {"fn", row.scores.fn},
                    {"precision", row.scores.precision()},
                    {"recall", row.scores.recall()},
                    {"f1", row.scores.f1()}});
  }
  j["rows"] = std::move(rows);
  j["overall"] = {{"tp", report.overall.tp},
                  {"fp", report.overall.fp},
                  {"fn", report.overall.fn},
                  {"precision", report.overall.precision()},
                  {"recall", report.overall.recall()},
                  {"f1", report.overall.f1()}};
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f1", report.macro_f1},
                {"categories", report.macro_categories}};
  return j.dump(2);
}

std::string eval_report_table(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(10) << "language" << std::setw(12)
      << "granularity" << std::setw(28) << "category" << std::right
      << std::setw(8) << "P" << std::setw(8) << "R" << std::setw(8) << "F1"
      << std::setw(7) << "TP" << std::setw(7) << "FP" << std::setw(7) << "FN"
      << '\n';
  auto line = [&](const EvalRow& row) {
    out << std::left << std::setw(10)
        << (row.language.empty() ? "all" : row.language) << std::setw(12)
        << (row.granularity.empty() ? "-" : row.granularity) << std::setw(28)
        << (row.category.empty() ? "ALL" : row.category) << std::right
        << std::setw(8) << row.scores.precision() << std::setw(8)
        << row.scores.recall() << std::setw(8) << row.scores.f1()
        << std::setw(7) << row.scores.tp << std::setw(7) << row.scores.fp
        << std::setw(7) << row.scores.fn << '\n';
  };
  for (const auto& row : report.rows) line(row);
  line({"", "", "", report.overall});
  out << "macro (" << report.macro_categories
      << " categories): P=" << report.macro_precision
      << " R=" << report.macro_recall << " F1=" << report.macro_f1 << '\n';
  return out.str();
}

}  // namespace casner
