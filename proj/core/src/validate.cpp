#include "casner/validate.hpp"

#include <algorithm>
#include <set>

#include "casner/utf8.hpp"

namespace casner {

namespace {

void check_record(const AnnotatedSentence& rec, ValidationReport& report) {
  const std::string& id = rec.sentence.id;
  auto add = [&](std::string code, std::string message) {
    report.violations.push_back({id, std::move(code), std::move(message)});
  };

  if (rec.sentence.text.empty()) {
    add("empty text", "sentence text is empty");
    return;
  }
  const std::size_t text_len = utf8::length(rec.sentence.text);

  std::set<std::string> seen_types;
  for (const auto& name : rec.type_list.names) {
    if (name.empty()) add("empty type name", "type list contains an empty name");
    if (!seen_types.insert(name).second)
      add("duplicate type", "type list repeats '" + name + "'");
  }

  std::vector<const Entity*> sorted;
  sorted.reserve(rec.entities.size());
  for (const auto& e : rec.entities) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const Entity* a, const Entity* b) {
    return a->span.start < b->span.start;
  });

  const Entity* prev = nullptr;
  for (const Entity* e : sorted) {
    const auto& sp = e->span;
    if (sp.start >= sp.end || sp.end > text_len) {
      add("span out of range",
          "span [" + std::to_string(sp.start) + ", " + std::to_string(sp.end) +
              ") does not fit text of length " + std::to_string(text_len));
    } else if (utf8::slice(rec.sentence.text, sp.start, sp.end) != sp.surface) {
      add("surface mismatch",
          "span [" + std::to_string(sp.start) + ", " + std::to_string(sp.end) +
              ") surface '" + sp.surface + "' differs from the text slice");
    }
    if (prev && sp.start < prev->span.end && sp.end > prev->span.start) {
      add("overlap", "spans [" + std::to_string(prev->span.start) + ", " +
                         std::to_string(prev->span.end) + ") and [" +
                         std::to_string(sp.start) + ", " +
                         std::to_string(sp.end) + ") overlap");
    }
    if (!e->label.is_unknown() && !rec.type_list.contains(e->label.name())) {
      add("label not in type list",
          "label '" + e->label.name() + "' missing from the record's type list");
    }
    prev = e;
  }
}

}  // namespace

ValidationReport validate_dataset(std::span<const AnnotatedSentence> ds) {
  ValidationReport report;
  std::set<std::string> ids;
  for (const auto& rec : ds) {
    if (!ids.insert(rec.sentence.id).second)
      report.violations.push_back(
          {rec.sentence.id, "duplicate id", "sentence id is not unique"});
    check_record(rec, report);
  }
  return report;
}

}  // namespace casner
