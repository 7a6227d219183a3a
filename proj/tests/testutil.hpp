// Shared fixture builders for the test suites.
#ifndef CASNER_TESTS_TESTUTIL_HPP
#define CASNER_TESTS_TESTUTIL_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "casner/types.hpp"
#include "casner/utf8.hpp"

namespace casner::testutil {

inline Sentence make_sentence(std::string id, std::string text,
                              std::string language = "en") {
  return Sentence{std::move(id), std::move(text), std::move(language)};
}

inline EntitySpan span_of(const Sentence& s, std::size_t start, std::size_t end) {
  return EntitySpan{start, end, utf8::slice(s.text, start, end)};
}

inline AnnotatedSentence make_record(Sentence s,
                                     std::vector<std::pair<EntitySpan, std::string>> entities,
                                     std::vector<std::string> types,
                                     LabelLevel level = LabelLevel::Flat,
                                     bool allow_unknown = false) {
  AnnotatedSentence rec;
  rec.sentence = std::move(s);
  for (auto& [sp, name] : entities)
    rec.entities.push_back({sp, Label(name, level)});
  rec.type_list.names = std::move(types);
  rec.type_list.allow_unknown = allow_unknown;
  return rec;
}

/// Random sentences across Latin, CJK, and Cyrillic scripts, plus random
/// non-overlapping spans over them. The generator is fully seeded.
class RandomTextGen {
public:
  explicit RandomTextGen(std::uint64_t seed) : rng_(seed) {}

  std::string sentence(std::size_t min_tokens = 3, std::size_t max_tokens = 12) {
    const int script = pick(0, 2);
    const std::size_t tokens = static_cast<std::size_t>(
        pick(static_cast<int>(min_tokens), static_cast<int>(max_tokens)));
    std::u32string out;
    for (std::size_t t = 0; t < tokens; ++t) {
      if (t && script != 1) out += U' ';  // CJK runs unsegmented
      const std::size_t len = static_cast<std::size_t>(pick(1, 6));
      for (std::size_t k = 0; k < len; ++k) out += letter(script);
    }
    return utf8::encode(out);
  }

  /// Up to max_spans disjoint spans over a text of `length` scalars.
  std::vector<EntitySpan> spans(const std::string& text, int max_spans) {
    const std::size_t length = utf8::length(text);
    std::vector<EntitySpan> out;
    if (length < 2) return out;
    std::size_t cursor = 0;
    const int want = pick(0, max_spans);
    for (int i = 0; i < want && cursor + 1 < length; ++i) {
      const std::size_t start =
          cursor + static_cast<std::size_t>(
                       pick(0, static_cast<int>(length - cursor - 1)));
      if (start + 1 > length) break;
      const std::size_t max_len = std::min<std::size_t>(length - start, 8);
      const std::size_t len =
          static_cast<std::size_t>(pick(1, static_cast<int>(max_len)));
      out.push_back(EntitySpan{start, start + len,
                               utf8::slice(text, start, start + len)});
      cursor = start + len;
    }
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

private:
  int pick(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }

  char32_t letter(int script) {
    switch (script) {
      case 0: return static_cast<char32_t>(U'a' + pick(0, 25));
      case 1: return static_cast<char32_t>(0x4e00 + pick(0, 0x9f));
      default: return static_cast<char32_t>(0x0410 + pick(0, 0x3f));
    }
  }

  std::mt19937_64 rng_;
};

/// Unique scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("casner-test-" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace casner::testutil

#endif  // CASNER_TESTS_TESTUTIL_HPP
