#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nutri::text {

// ASCII-only case folding; other bytes (UTF-8 continuation etc.) pass through.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);

// Replaces every run of whitespace with a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

// Splits on any byte that is not an ASCII letter or digit; empty tokens dropped.
std::vector<std::string_view> word_tokens(std::string_view s);

bool contains_word(std::string_view s, std::string_view word);

}  // namespace nutri::text
