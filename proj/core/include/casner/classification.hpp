#ifndef CASNER_CLASSIFICATION_HPP
#define CASNER_CLASSIFICATION_HPP

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "casner/backend.hpp"
#include "casner/markup.hpp"
#include "casner/taxonomy.hpp"
#include "casner/types.hpp"

namespace casner {

enum class ClassificationMode { Supervised, ZeroShot };

/// Exact zero-shot escape sentence appended to the query.
inline constexpr std::string_view kUnknownSuffix =
    "If none of them applied, return unknown";

/// One classification request: a sentence with exactly one `##`-marked
/// entity plus the candidate type list.
struct ClassificationQuery {
  MarkedText marked;
  TypeList type_list;
  ClassificationMode mode = ClassificationMode::Supervised;
};

using ClassificationDemo = std::pair<ClassificationQuery, Label>;

struct ClassifyConfig {
  int max_tokens = 32;
  std::size_t max_demos = 3;
};

/// Final user turn carries the comma-separated type list (file order) and
/// the marked sentence; zero-shot mode appends kUnknownSuffix verbatim.
/// Demos render as prior user/assistant turns.
std::vector<ChatMessage> build_classification_prompt(
    const ClassificationQuery& q, std::span<const ClassificationDemo> demos = {},
    std::size_t max_demos = 3);

/// Match cascade over a generation: (1) trimmed, case-insensitive exact
/// match; (2) unique case-insensitive substring occurrence of a list name;
/// (3) the literal "unknown" when the list admits it. Throws UnparseableLabel
/// when nothing fires or rule 2 is ambiguous.
Label parse_label(std::string_view generation, const TypeList& tl);

/// One generation at temperature 0, then parse_label; an unparseable answer
/// is retried once with an added instruction before the error propagates.
Label classify_entity(ChatBackend& backend, const ClassificationQuery& q,
                      std::span<const ClassificationDemo> demos = {},
                      const ClassifyConfig& cfg = {});

/// Progressive multi-granularity descent: classify over the coarse names,
/// then repeatedly over the chosen node's subcategories until a leaf or an
/// Unknown answer stops the walk. Returns one label per level reached (a
/// trailing Unknown is included as-is).
std::vector<Label> classify_progressive(ChatBackend& backend,
                                        const MarkedText& marked,
                                        const Taxonomy& tax,
                                        ClassificationMode mode,
                                        const ClassifyConfig& cfg = {});

}  // namespace casner

#endif  // CASNER_CLASSIFICATION_HPP
