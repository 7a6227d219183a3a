#include "casner/utf8.hpp"

#include <stdexcept>

#include "casner/errors.hpp"

namespace casner::utf8 {

namespace {

// Decodes one scalar starting at s[i]; advances i past it.
char32_t decode_one(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) -> unsigned char {
    return static_cast<unsigned char>(s[k]);
  };
  unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int extra;
  char32_t cp;
  if ((b0 & 0xe0) == 0xc0) {
    extra = 1;
    cp = b0 & 0x1f;
  } else if ((b0 & 0xf0) == 0xe0) {
    extra = 2;
    cp = b0 & 0x0f;
  } else if ((b0 & 0xf8) == 0xf0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    throw ParseError("invalid UTF-8 lead byte at offset " + std::to_string(i));
  }
  if (i + static_cast<std::size_t>(extra) >= s.size()) {
    throw ParseError("truncated UTF-8 sequence at offset " + std::to_string(i));
  }
  for (int k = 1; k <= extra; ++k) {
    unsigned char b = byte(i + static_cast<std::size_t>(k));
    if ((b & 0xc0) != 0x80)
      throw ParseError("invalid UTF-8 continuation at offset " +
                       std::to_string(i + static_cast<std::size_t>(k)));
    cp = (cp << 6) | (b & 0x3f);
  }
  // Reject overlongs, surrogates, and out-of-range values.
  static const char32_t min_for_len[4] = {0, 0x80, 0x800, 0x10000};
  if (cp < min_for_len[extra] || cp > 0x10ffff ||
      (cp >= 0xd800 && cp <= 0xdfff)) {
    throw ParseError("invalid UTF-8 scalar at offset " + std::to_string(i));
  }
  i += static_cast<std::size_t>(extra) + 1;
  return cp;
}

}  // namespace

std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) out.push_back(decode_one(s, i));
  return out;
}

std::string encode(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
  }
  return out;
}

std::string encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) out += encode(c);
  return out;
}

std::size_t length(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    decode_one(s, i);
    ++n;
  }
  return n;
}

std::string slice(std::string_view s, std::size_t from, std::size_t to) {
  if (from > to) throw std::out_of_range("slice: from > to");
  std::size_t i = 0, n = 0;
  std::size_t byte_from = std::string_view::npos;
  while (true) {
    if (n == from) byte_from = i;
    if (n == to) return std::string(s.substr(byte_from, i - byte_from));
    if (i >= s.size()) break;
    decode_one(s, i);
    ++n;
  }
  throw std::out_of_range("slice: offsets beyond end of string");
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == U' ' || c == U'　';
}

}  // namespace casner::utf8
