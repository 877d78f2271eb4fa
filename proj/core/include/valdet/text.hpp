#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace valdet::text {

/// Decodes UTF-8 into code points. Invalid bytes map to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

bool is_cyrillic(char32_t cp);
bool is_latin(char32_t cp);
/// Letters from the Latin and Cyrillic blocks.
bool is_alpha(char32_t cp);
bool is_digit(char32_t cp);
bool is_space(char32_t cp);
/// ASCII punctuation, Latin-1 punctuation, general punctuation block and
/// the CJK/fullwidth punctuation that shows up in social posts.
bool is_punct(char32_t cp);

char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view s);

/// Lowercase + collapse whitespace runs to a single space + trim.
std::string normalize_for_dedup(std::string_view s);

using Token = std::string;
using Tokens = std::vector<Token>;

/// Lowercases, strips punctuation (punctuation acts as a separator) and
/// splits on whitespace. Emoji and other symbols survive as token characters.
Tokens tokenize(std::string_view s);

/// Optional token rewriter (for example a lemmatizer). Identity when empty.
using Lemmatizer = std::function<std::string(std::string_view)>;
Tokens tokenize(std::string_view s, const Lemmatizer& lemmatizer);

/// A token is Cyrillic when it has at least one letter and all its letters
/// are Cyrillic.
bool is_cyrillic_word(std::string_view token);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace valdet::text
