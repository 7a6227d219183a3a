#ifndef CASNER_MARKUP_HPP
#define CASNER_MARKUP_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "casner/types.hpp"

namespace casner {

inline constexpr std::string_view kMarkupDelimiter = "##";

/// A sentence rendering in which entity spans are wrapped in `##`.
/// Construction validates the markup: even delimiter count, non-empty
/// regions (throws MalformedMarkup otherwise). Regions cannot nest because
/// the delimiter is symmetric.
class MarkedText {
public:
  MarkedText(std::string text, std::string source_id);

  const std::string& text() const { return text_; }
  const std::string& source_id() const { return source_id_; }
  std::size_t region_count() const { return region_count_; }

private:
  std::string text_;
  std::string source_id_;
  std::size_t region_count_ = 0;
};

/// Recovery thresholds for parse_marked. The strict path needs none; these
/// only govern the LCS fallback.
struct MarkupOptions {
  double region_min_coverage = 0.8;      // marked region dropped below this
  double generation_min_coverage = 0.5;  // whole generation fails below this
};

/// Wraps each span in `##`, left to right. Spans must be valid against the
/// sentence and non-overlapping (OverlapError). Surfaces containing the
/// delimiter itself cannot be represented and are rejected (MalformedMarkup).
MarkedText render_marked(const Sentence& s, std::vector<EntitySpan> spans);

struct MarkupParse {
  std::vector<EntitySpan> spans;
  bool recovered = false;  // true when the LCS fallback produced the spans
};

/// Locates the `##`-marked regions of `generation` in `original`.
///
/// Strict path: if the generation with delimiters stripped equals the
/// original (exactly, or after whitespace normalization), offsets come from
/// direct position mapping. Recovery path: otherwise the stripped generation
/// is aligned to the original by character-level LCS and each region maps to
/// the original range covered by its aligned characters; regions aligning
/// below `region_min_coverage` of their length are dropped.
///
/// Throws MalformedMarkup (odd delimiter count, empty region) and
/// AlignmentFailure (whole-generation LCS coverage below
/// `generation_min_coverage`).
MarkupParse parse_marked(std::string_view generation, const Sentence& original,
                         const MarkupOptions& opts = {});

/// One single-region MarkedText per span, ordered by span start.
std::vector<MarkedText> reembed_each(const Sentence& s,
                                     std::vector<EntitySpan> spans);

}  // namespace casner

#endif  // CASNER_MARKUP_HPP
