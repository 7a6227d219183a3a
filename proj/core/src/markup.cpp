#include "casner/markup.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "casner/errors.hpp"
#include "casner/utf8.hpp"

namespace casner {

namespace {

constexpr char32_t kHash = U'#';

struct Region {
  std::size_t begin;  // offsets into the stripped generation, in scalars
  std::size_t end;
};

// Splits a generation into the delimiter-stripped text plus the marked
// regions, scanning for non-overlapping `##` occurrences left to right.
struct StrippedGeneration {
  std::u32string text;
  std::vector<Region> regions;
};

StrippedGeneration strip_markup(const std::u32string& gen) {
  StrippedGeneration out;
  bool inside = false;
  std::size_t region_begin = 0;
  std::size_t i = 0;
  while (i < gen.size()) {
    if (i + 1 < gen.size() && gen[i] == kHash && gen[i + 1] == kHash) {
      if (!inside) {
        region_begin = out.text.size();
      } else {
        if (out.text.size() == region_begin)
          throw MalformedMarkup("empty marked region");
        out.regions.push_back({region_begin, out.text.size()});
      }
      inside = !inside;
      i += 2;
      continue;
    }
    out.text.push_back(gen[i]);
    ++i;
  }
  if (inside) throw MalformedMarkup("odd number of markup delimiters");
  return out;
}

// Whitespace normalization: collapse runs to one space, trim ends. `map`
// gives, for each output character, the index of the input character it came
// from (a collapsed run maps to its first whitespace character).
std::u32string normalize_ws(const std::u32string& in, std::vector<std::size_t>& map) {
  std::u32string out;
  map.clear();
  std::size_t i = 0;
  const std::size_t n = in.size();
  while (i < n) {
    if (utf8::is_space(in[i])) {
      std::size_t run_start = i;
      while (i < n && utf8::is_space(in[i])) ++i;
      if (!out.empty() && i < n) {  // interior run; leading/trailing trimmed
        out.push_back(U' ');
        map.push_back(run_start);
      }
    } else {
      out.push_back(in[i]);
      map.push_back(i);
      ++i;
    }
  }
  return out;
}

// Positions each stripped-generation character takes in its normalized form,
// or npos for characters the normalization dropped.
std::vector<std::size_t> normalized_positions(const std::u32string& in,
                                              const std::vector<std::size_t>& map) {
  std::vector<std::size_t> pos(in.size(), std::string::npos);
  for (std::size_t out_i = 0; out_i < map.size(); ++out_i) pos[map[out_i]] = out_i;
  return pos;
}

// Character-level LCS matching. Returns, for each position of `a`, the
// matched position in `b` or npos. Greedy diagonal on equal characters is
// optimal; remaining ties resolve toward `a`.
std::vector<std::size_t> lcs_match(const std::u32string& a, const std::u32string& b) {
  const std::size_t n = a.size(), m = b.size();
  constexpr std::size_t kMaxCells = std::size_t(1) << 26;
  if (n && m && n > kMaxCells / m)
    throw AlignmentFailure("texts too long for alignment recovery");
  std::vector<std::uint32_t> dp((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
    return dp[i * (m + 1) + j];
  };
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = a[i - 1] == b[j - 1]
                     ? at(i - 1, j - 1) + 1
                     : std::max(at(i - 1, j), at(i, j - 1));
  std::vector<std::size_t> match(n, std::string::npos);
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (a[i - 1] == b[j - 1]) {
      match[i - 1] = j - 1;
      --i;
      --j;
    } else if (at(i - 1, j) >= at(i, j - 1)) {
      --i;
    } else {
      --j;
    }
  }
  return match;
}

EntitySpan make_span(const Sentence& s, std::size_t start, std::size_t end) {
  return EntitySpan{start, end, utf8::slice(s.text, start, end)};
}

void check_span_against(const Sentence& s, const EntitySpan& sp, std::size_t len) {
  if (sp.start >= sp.end || sp.end > len)
    throw ValidationError("span [" + std::to_string(sp.start) + ", " +
                          std::to_string(sp.end) + ") out of range for sentence '" +
                          s.id + "'");
  if (utf8::slice(s.text, sp.start, sp.end) != sp.surface)
    throw ValidationError("span surface differs from sentence text in '" + s.id +
                          "'");
}

}  // namespace

MarkedText::MarkedText(std::string text, std::string source_id)
    : text_(std::move(text)), source_id_(std::move(source_id)) {
  const std::u32string u = utf8::decode(text_);
  region_count_ = strip_markup(u).regions.size();
}

MarkedText render_marked(const Sentence& s, std::vector<EntitySpan> spans) {
  const std::u32string text = utf8::decode(s.text);
  std::sort(spans.begin(), spans.end());
  const EntitySpan* prev = nullptr;
  for (const auto& sp : spans) {
    check_span_against(s, sp, text.size());
    if (sp.surface.find(kMarkupDelimiter) != std::string::npos)
      throw MalformedMarkup("span surface contains the markup delimiter");
    if (prev && sp.start < prev->end)
      throw OverlapError("spans overlap at offset " + std::to_string(sp.start));
    prev = &sp;
  }
  std::u32string out;
  out.reserve(text.size() + spans.size() * 4);
  std::size_t cursor = 0;
  for (const auto& sp : spans) {
    out.append(text, cursor, sp.start - cursor);
    out.append(U"##");
    out.append(text, sp.start, sp.end - sp.start);
    out.append(U"##");
    cursor = sp.end;
  }
  out.append(text, cursor, text.size() - cursor);
  return MarkedText(utf8::encode(out), s.id);
}

MarkupParse parse_marked(std::string_view generation, const Sentence& original,
                         const MarkupOptions& opts) {
  const std::u32string gen = utf8::decode(generation);
  const std::u32string orig = utf8::decode(original.text);
  StrippedGeneration stripped = strip_markup(gen);

  MarkupParse result;

  // Strict path, exact: render inserted delimiters only, so offsets map 1:1.
  if (stripped.text == orig) {
    for (const auto& r : stripped.regions)
      result.spans.push_back(make_span(original, r.begin, r.end));
    return result;
  }

  // Strict path, whitespace-normalized.
  std::vector<std::size_t> orig_map, gen_map;
  const std::u32string norm_orig = normalize_ws(orig, orig_map);
  const std::u32string norm_gen = normalize_ws(stripped.text, gen_map);
  if (!norm_orig.empty() && norm_gen == norm_orig) {
    const auto gen_pos = normalized_positions(stripped.text, gen_map);
    for (const auto& r : stripped.regions) {
      std::size_t lo = std::string::npos, hi = std::string::npos;
      for (std::size_t k = r.begin; k < r.end; ++k) {
        if (gen_pos[k] == std::string::npos) continue;
        if (lo == std::string::npos) lo = gen_pos[k];
        hi = gen_pos[k];
      }
      // Trim normalized whitespace at the region edges.
      while (lo != std::string::npos && lo <= hi && norm_orig[lo] == U' ') ++lo;
      while (hi != std::string::npos && hi >= lo && hi > 0 && norm_orig[hi] == U' ')
        --hi;
      if (lo == std::string::npos || hi == std::string::npos || lo > hi) continue;
      result.spans.push_back(
          make_span(original, orig_map[lo], orig_map[hi] + 1));
    }
    return result;
  }

  // Recovery path: LCS alignment of the stripped generation to the original.
  result.recovered = true;
  if (stripped.text.empty()) {
    if (stripped.regions.empty()) return result;
    throw AlignmentFailure("empty generation cannot be aligned");
  }
  const auto match = lcs_match(stripped.text, orig);
  std::size_t matched_total = 0;
  for (auto m : match)
    if (m != std::string::npos) ++matched_total;
  if (static_cast<double>(matched_total) <
      opts.generation_min_coverage * static_cast<double>(stripped.text.size()))
    throw AlignmentFailure("generation aligns to less than the required share "
                           "of its characters");
  for (const auto& r : stripped.regions) {
    std::size_t lo = std::string::npos, hi = std::string::npos, covered = 0;
    for (std::size_t k = r.begin; k < r.end; ++k) {
      if (match[k] == std::string::npos) continue;
      ++covered;
      if (lo == std::string::npos) lo = match[k];
      hi = match[k];
    }
    const double need =
        opts.region_min_coverage * static_cast<double>(r.end - r.begin);
    if (lo == std::string::npos || static_cast<double>(covered) < need) continue;
    result.spans.push_back(make_span(original, lo, hi + 1));
  }
  return result;
}

std::vector<MarkedText> reembed_each(const Sentence& s,
                                     std::vector<EntitySpan> spans) {
  std::sort(spans.begin(), spans.end());
  std::vector<MarkedText> out;
  out.reserve(spans.size());
  for (const auto& sp : spans) out.push_back(render_marked(s, {sp}));
  return out;
}

}  // namespace casner
