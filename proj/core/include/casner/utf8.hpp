#ifndef CASNER_UTF8_HPP
#define CASNER_UTF8_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace casner::utf8 {

// All character offsets in this library count Unicode scalar values, never
// bytes or UTF-16 units. These helpers convert between byte strings and
// scalar sequences; malformed UTF-8 raises ParseError.

std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
std::string encode(char32_t c);

/// Number of scalar values in `s`.
std::size_t length(std::string_view s);

/// Byte substring covering scalar offsets [from, to). Throws std::out_of_range
/// when the offsets do not fit the string.
std::string slice(std::string_view s, std::size_t from, std::size_t to);

/// Whitespace set used for markup normalization: ASCII whitespace plus
/// NO-BREAK SPACE and IDEOGRAPHIC SPACE.
bool is_space(char32_t c);

}  // namespace casner::utf8

#endif  // CASNER_UTF8_HPP
