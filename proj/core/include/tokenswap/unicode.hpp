#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tokenswap::unicode {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD one byte at a
// time so that every input has a defined, lossless-length decoding.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

bool is_whitespace(char32_t cp) noexcept;
// Unicode general categories Pc/Pd/Ps/Pe/Pi/Pf/Po for the Latin, General
// Punctuation, Supplemental Punctuation, CJK and fullwidth blocks.
bool is_punctuation(char32_t cp) noexcept;

std::string ascii_lower(std::string_view text);
std::string ascii_upper(std::string_view text);
std::string trim(std::string_view text);

// Splits on Unicode whitespace, dropping empty fields.
std::vector<std::string> split_whitespace(std::string_view text);

// Removes punctuation code points and collapses whitespace runs to one space.
std::string strip_punctuation(std::string_view text);

std::size_t code_point_count(std::string_view text);

}  // namespace tokenswap::unicode
