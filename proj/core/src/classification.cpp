#include "casner/classification.hpp"

#include <algorithm>
#include <cctype>

#include "casner/errors.hpp"

namespace casner {

namespace {

constexpr std::string_view kClassificationSystemLine =
    "Answer with one entity type name.";
constexpr std::string_view kReprompt =
    "Answer with exactly one of the listed type names.";

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

// Trims ASCII whitespace and punctuation from both ends; multibyte UTF-8
// characters are untouched.
std::string_view trim_edges(std::string_view s) {
  auto junk = [](unsigned char c) {
    return c < 128 && (std::isspace(c) || std::ispunct(c));
  };
  while (!s.empty() && junk(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && junk(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::string query_text(const ClassificationQuery& q) {
  std::string types;
  for (std::size_t i = 0; i < q.type_list.names.size(); ++i) {
    if (i) types += ", ";
    types += q.type_list.names[i];
  }
  std::string out = "Entity types: " + types + "\nSentence: " + q.marked.text() +
                    "\nGenerate the label for the entity surrounded by ##.";
  if (q.mode == ClassificationMode::ZeroShot) {
    out += " ";
    out += kUnknownSuffix;
  }
  return out;
}

void check_query(const ClassificationQuery& q) {
  if (q.marked.region_count() != 1)
    throw ValidationError("classification query must mark exactly one entity, "
                          "got " + std::to_string(q.marked.region_count()));
  if (q.type_list.names.empty())
    throw ValidationError("classification query needs a non-empty type list");
}

}  // namespace

std::vector<ChatMessage> build_classification_prompt(
    const ClassificationQuery& q, std::span<const ClassificationDemo> demos,
    std::size_t max_demos) {
  check_query(q);
  if (demos.size() > max_demos)
    throw ValidationError("too many demonstrations: " +
                          std::to_string(demos.size()) + " > " +
                          std::to_string(max_demos));
  std::vector<ChatMessage> out;
  out.reserve(2 + demos.size() * 2);
  out.push_back(system_message(std::string(kClassificationSystemLine)));
  for (const auto& [demo_q, demo_label] : demos) {
    check_query(demo_q);
    if (!demo_label.is_unknown() &&
        !demo_q.type_list.contains(demo_label.name()))
      throw ValidationError("demonstration label '" + demo_label.name() +
                            "' is not in its own type list");
    out.push_back(user_message(query_text(demo_q)));
    out.push_back(assistant_message(
        demo_label.is_unknown() ? "unknown" : demo_label.name()));
  }
  out.push_back(user_message(query_text(q)));
  return out;
}

Label parse_label(std::string_view generation, const TypeList& tl) {
  const std::string trimmed = ascii_lower(trim_edges(generation));

  // Rule 1: exact match after trimming and case folding.
  for (const auto& name : tl.names)
    if (ascii_lower(name) == trimmed) return Label(name, LabelLevel::Flat);

  // Rule 2: exactly one list name occurs as a substring of the generation.
  const std::string hay = ascii_lower(generation);
  const std::string* found = nullptr;
  for (const auto& name : tl.names) {
    if (hay.find(ascii_lower(name)) == std::string::npos) continue;
    if (found)
      throw UnparseableLabel("generation mentions several type names: '" +
                             *found + "' and '" + name + "'");
    found = &name;
  }
  if (found) return Label(*found, LabelLevel::Flat);

  // Rule 3: the zero-shot escape.
  if (tl.allow_unknown && trimmed == "unknown") return Label::unknown();

  throw UnparseableLabel("generation matches no candidate type: '" +
                         std::string(generation) + "'");
}

Label classify_entity(ChatBackend& backend, const ClassificationQuery& q,
                      std::span<const ClassificationDemo> demos,
                      const ClassifyConfig& cfg) {
  auto messages = build_classification_prompt(q, demos, cfg.max_demos);
  GenerationParams params;
  params.temperature = 0.0;
  params.max_tokens = cfg.max_tokens;

  const std::string generation = backend.chat_complete(messages, params);
  try {
    return parse_label(generation, q.type_list);
  } catch (const UnparseableLabel&) {
    // One reprompt with a tightened instruction, then give up.
    messages.push_back(assistant_message(generation));
    messages.push_back(user_message(std::string(kReprompt)));
    const std::string retry = backend.chat_complete(messages, params);
    return parse_label(retry, q.type_list);
  }
}

std::vector<Label> classify_progressive(ChatBackend& backend,
                                        const MarkedText& marked,
                                        const Taxonomy& tax,
                                        ClassificationMode mode,
                                        const ClassifyConfig& cfg) {
  if (marked.region_count() != 1)
    throw ValidationError("progressive classification needs exactly one "
                          "marked entity");
  std::vector<Label> out;
  LabelLevel level = LabelLevel::Coarse;
  TypeList candidates = tax.level_names(LabelLevel::Coarse);
  candidates.allow_unknown = mode == ClassificationMode::ZeroShot;

  while (!candidates.names.empty()) {
    ClassificationQuery q{marked, candidates, mode};
    const Label answer = classify_entity(backend, q, {}, cfg);
    if (answer.is_unknown()) {
      out.push_back(answer);
      break;
    }
    const Label placed(answer.name(), level);
    out.push_back(placed);
    TypeList next = tax.subcategories_of(placed);
    next.allow_unknown = candidates.allow_unknown;
    candidates = std::move(next);
    level = level == LabelLevel::Coarse ? LabelLevel::Medium : LabelLevel::Fine;
  }
  return out;
}

}  // namespace casner
