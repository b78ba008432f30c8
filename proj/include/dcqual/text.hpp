#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// String helpers shared by the metrics and normalization code. All input is
// treated as UTF-8; invalid sequences are passed through byte by byte.
namespace dcqual::text {

/// ASCII whitespace: space, \t, \n, \v, \f, \r.
bool is_space(char c) noexcept;

std::string_view trim(std::string_view s) noexcept;

/// True when `s` has no non-whitespace character.
bool is_blank(std::string_view s) noexcept;

/// Number of Unicode scalar values (code points) in `s`.
std::size_t utf8_length(std::string_view s) noexcept;

/// Case- and accent-folded form used for loose comparisons.
///
/// ASCII is lowercased. Latin-1 Supplement and Latin Extended-A letters are
/// lowercased and stripped of diacritics ("Á" -> "a", "ñ" -> "n",
/// "ç" -> "c"). Other code points are copied unchanged.
std::string fold(std::string_view s);

std::string ascii_lower(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace dcqual::text
