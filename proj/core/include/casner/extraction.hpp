#ifndef CASNER_EXTRACTION_HPP
#define CASNER_EXTRACTION_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "casner/backend.hpp"
#include "casner/markup.hpp"
#include "casner/types.hpp"

namespace casner {

enum class ParseStatus { Ok, Recovered, Dropped };

std::string_view parse_status_name(ParseStatus s);

/// One of the k repeated extractions for a sentence.
struct ExtractionRound {
  int index = 1;  // 1..k
  std::vector<EntitySpan> spans;
  std::string raw_generation;
  ParseStatus parse_status = ParseStatus::Ok;
};

struct ExtractionConfig {
  int rounds = 3;                    // k; CLI --rounds
  double diversity_temperature = 0.7;  // rounds 2..k; round 1 runs at 0
  std::uint64_t base_seed = 0;       // round i uses base_seed + i
  int max_tokens = 512;
  std::size_t max_demos = 3;
  MarkupOptions markup;
};

using ExtractionDemo = std::pair<Sentence, MarkedText>;

/// Minimal extraction prompt: one fixed system line, each demo as a
/// user/assistant pair, then the bare sentence. The final turn carries no
/// task description and no category information.
std::vector<ChatMessage> build_extraction_prompt(
    const Sentence& s, std::span<const ExtractionDemo> demos,
    std::size_t max_demos = 3);

/// Runs k generations for one sentence. Generations that parse_marked
/// rejects yield a round with parse_status Dropped and no spans.
std::vector<ExtractionRound> extract_rounds(
    ChatBackend& backend, const Sentence& s, int k,
    const ExtractionConfig& cfg = {}, std::span<const ExtractionDemo> demos = {});

bool spans_overlap(const EntitySpan& a, const EntitySpan& b);

/// Dominance order used by result fusion: a beats b when they overlap and a
/// is longer; equal lengths fall back to smaller start, then lexicographic
/// surface.
bool dominates(const EntitySpan& a, const EntitySpan& b);

/// Union of all rounds with length-first resolution of overlapping or nested
/// spans: the result keeps exactly the spans no other extracted span
/// dominates, and therefore never contains two overlapping spans.
std::vector<EntitySpan> fuse_results(
    const std::vector<std::vector<EntitySpan>>& rounds);

}  // namespace casner

#endif  // CASNER_EXTRACTION_HPP
