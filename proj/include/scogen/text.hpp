#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace scogen::text {

inline constexpr char32_t kReplacementChar = 0xFFFD;

/// Decodes UTF-8. Malformed sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

/// Number of code points (malformed bytes count one each).
std::size_t code_point_count(std::string_view bytes);

bool is_space(char32_t cp);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
/// Trims and collapses every run of whitespace into a single ASCII space.
std::string collapse_whitespace(std::string_view s);

/// Lines split on '\n'; a trailing '\r' stays with the line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Whitespace-separated tokens.
std::vector<std::string> tokenize(std::string_view s);

bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

}  // namespace scogen::text
