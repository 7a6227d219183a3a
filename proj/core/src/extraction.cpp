#include "casner/extraction.hpp"

#include <algorithm>

#include "casner/errors.hpp"

namespace casner {

namespace {

constexpr std::string_view kExtractionSystemLine =
    "Copy the sentence and surround every named entity with ##.";

}  // namespace

std::string_view parse_status_name(ParseStatus s) {
  switch (s) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::Recovered: return "recovered";
    case ParseStatus::Dropped: return "dropped";
  }
  return "ok";
}

std::vector<ChatMessage> build_extraction_prompt(
    const Sentence& s, std::span<const ExtractionDemo> demos,
    std::size_t max_demos) {
  if (demos.size() > max_demos)
    throw ValidationError("too many demonstrations: " +
                          std::to_string(demos.size()) + " > " +
                          std::to_string(max_demos));
  std::vector<ChatMessage> out;
  out.reserve(2 + demos.size() * 2);
  out.push_back(system_message(std::string(kExtractionSystemLine)));
  for (const auto& [demo_sentence, marked] : demos) {
    // MarkedText construction already validated the markup.
    out.push_back(user_message(demo_sentence.text));
    out.push_back(assistant_message(marked.text()));
  }
  out.push_back(user_message(s.text));
  return out;
}

std::vector<ExtractionRound> extract_rounds(
    ChatBackend& backend, const Sentence& s, int k, const ExtractionConfig& cfg,
    std::span<const ExtractionDemo> demos) {
  if (k < 1) throw ValidationError("extraction needs at least one round");
  const auto messages = build_extraction_prompt(s, demos, cfg.max_demos);
  std::vector<ExtractionRound> rounds;
  rounds.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) {
    GenerationParams params;
    params.temperature = i == 1 ? 0.0 : cfg.diversity_temperature;
    params.seed = cfg.base_seed + static_cast<std::uint64_t>(i);
    params.max_tokens = cfg.max_tokens;

    ExtractionRound round;
    round.index = i;
    round.raw_generation = backend.chat_complete(messages, params);
    try {
      MarkupParse parsed = parse_marked(round.raw_generation, s, cfg.markup);
      round.spans = std::move(parsed.spans);
      round.parse_status =
          parsed.recovered ? ParseStatus::Recovered : ParseStatus::Ok;
    } catch (const MalformedMarkup&) {
      round.parse_status = ParseStatus::Dropped;
    } catch (const AlignmentFailure&) {
      round.parse_status = ParseStatus::Dropped;
    }
    rounds.push_back(std::move(round));
  }
  return rounds;
}

bool spans_overlap(const EntitySpan& a, const EntitySpan& b) {
  return a.start < b.end && b.start < a.end;
}

bool dominates(const EntitySpan& a, const EntitySpan& b) {
  if (a == b || !spans_overlap(a, b)) return false;
  if (a.length() != b.length()) return a.length() > b.length();
  if (a.start != b.start) return a.start < b.start;
  return a.surface < b.surface;
}

std::vector<EntitySpan> fuse_results(
    const std::vector<std::vector<EntitySpan>>& rounds) {
  std::vector<EntitySpan> pool;
  for (const auto& round : rounds)
    pool.insert(pool.end(), round.begin(), round.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  // Overlap components form runs once the pool is sorted by start: a span
  // belongs to the current component while it starts before the furthest end
  // seen so far.
  std::vector<EntitySpan> kept;
  std::size_t comp_begin = 0;
  std::size_t comp_max_end = 0;
  auto flush = [&](std::size_t comp_end) {
    for (std::size_t i = comp_begin; i < comp_end; ++i) {
      bool dominated = false;
      for (std::size_t j = comp_begin; j < comp_end && !dominated; ++j)
        dominated = j != i && dominates(pool[j], pool[i]);
      if (!dominated) kept.push_back(pool[i]);
    }
  };
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i == comp_begin) {
      comp_max_end = pool[i].end;
      continue;
    }
    if (pool[i].start < comp_max_end) {
      comp_max_end = std::max(comp_max_end, pool[i].end);
    } else {
      flush(i);
      comp_begin = i;
      comp_max_end = pool[i].end;
    }
  }
  flush(pool.size());
  return kept;
}

}  // namespace casner
