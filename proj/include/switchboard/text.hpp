#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace switchboard::text {

// ASCII case folding; bytes outside A-Z pass through unchanged.
std::string fold(std::string_view s);

std::string_view trim(std::string_view s);

bool is_word_char(char c);

// Splits on every non-word character; empty pieces are dropped.
std::vector<std::string> tokens(std::string_view s);

// Non-overlapping occurrences of `needle` in `hay`.
std::size_t count_substring(std::string_view hay, std::string_view needle);

// Occurrences of `needle` in `hay` whose neighbours on both sides are not word
// characters. `needle` may contain spaces or punctuation.
std::size_t count_whole_word(std::string_view hay, std::string_view needle);

} // namespace switchboard::text
