#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string utilities shared by the schema, parse and eval modules.
namespace mtie::text {

std::string_view trim(std::string_view s);

bool is_space(char c);

// Lower-cases ASCII letters only; multibyte UTF-8 passes through untouched.
std::string ascii_lower(std::string_view s);

std::string collapse_whitespace(std::string_view s);

// Type-name canonicalization: trim whitespace and quote characters, fold
// ASCII case, collapse internal whitespace runs. Underscores and hyphens are
// significant.
std::string canonicalize(std::string_view name);

// Cell cleanup applied to every extracted span: strips surrounding
// whitespace, one layer of matching quotes (straight, curly, backtick) and
// trailing punctuation, repeatedly. Interior bytes are preserved.
std::string clean_cell(std::string_view cell);

// Maps full-width punctuation used in Chinese replies (and
// the enumeration comma) onto ASCII: ，（）［］【】；｜、
std::string normalize_punctuation(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

// Decodes UTF-8 into code points; malformed bytes are returned as-is
// (one code point per byte) so this never throws.
std::vector<std::string> utf8_chars(std::string_view s);

bool contains_cjk(std::string_view s);

std::string sha256_hex(std::string_view data);

// Quote-aware split on a single-byte delimiter. A quote only opens at the
// start of a field and only closes when followed by optional whitespace and
// the delimiter (or end of input), so apostrophes inside words survive.
std::vector<std::string> split_fields(std::string_view s, char delim);

}  // namespace mtie::text
