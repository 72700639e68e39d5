#include "mtie/text.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace mtie::text {

namespace {

struct QuotePair {
  std::string_view open;
  std::string_view close;
};

// A backtick may be closed by an apostrophe (`LOC' in TeX-flavoured text).
constexpr std::array<QuotePair, 9> kQuotePairs = {{
    {"'", "'"},
    {"\"", "\""},
    {"`", "`"},
    {"`", "'"},
    {"\xE2\x80\x98", "\xE2\x80\x99"},  // ‘ ’
    {"\xE2\x80\x9C", "\xE2\x80\x9D"},  // “ ”
    {"\xE2\x80\x99", "\xE2\x80\x99"},  // ’ ’
    {"\xE3\x80\x8C", "\xE3\x80\x8D"},  // 「 」
    {"\xE3\x80\x8E", "\xE3\x80\x8F"},  // 『 』
}};

constexpr std::array<std::string_view, 13> kQuoteChars = {
    "'", "\"", "`", "\xE2\x80\x98", "\xE2\x80\x99", "\xE2\x80\x9C", "\xE2\x80\x9D",
    "\xE3\x80\x8C", "\xE3\x80\x8D", "\xE3\x80\x8E", "\xE3\x80\x8F", "\xEF\xBC\x82",
    "\xEF\xBC\x87"};

constexpr std::array<std::string_view, 12> kTrailingPunct = {
    ".", ",", ";", ":", "!", "?", "\xE3\x80\x82" /* 。 */, "\xEF\xBC\x8C" /* ， */,
    "\xEF\xBC\x9B" /* ； */, "\xEF\xBC\x81" /* ！ */, "\xEF\xBC\x9F" /* ？ */,
    "\xEF\xBC\x9A" /* ： */};

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

std::size_t leading_quote_len(std::string_view s) {
  for (auto q : kQuoteChars) {
    if (starts_with(s, q)) return q.size();
  }
  return 0;
}

std::size_t trailing_quote_len(std::string_view s) {
  for (auto q : kQuoteChars) {
    if (ends_with(s, q)) return q.size();
  }
  return 0;
}

std::string_view strip_outer_quotes(std::string_view s) {
  for (const auto& [open, close] : kQuotePairs) {
    if (s.size() >= open.size() + close.size() && starts_with(s, open) && ends_with(s, close)) {
      return s.substr(open.size(), s.size() - open.size() - close.size());
    }
  }
  return s;
}

std::string_view strip_trailing_punct(std::string_view s) {
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    for (auto p : kTrailingPunct) {
      if (ends_with(s, p)) {
        s.remove_suffix(p.size());
        changed = true;
        break;
      }
    }
  }
  return s;
}

}  // namespace

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  // U+3000 IDEOGRAPHIC SPACE and NBSP count as whitespace too.
  bool changed = true;
  while (changed) {
    changed = false;
    while (!s.empty() && is_space(s.front())) { s.remove_prefix(1); changed = true; }
    while (!s.empty() && is_space(s.back())) { s.remove_suffix(1); changed = true; }
    for (std::string_view ws : {std::string_view("\xE3\x80\x80"), std::string_view("\xC2\xA0")}) {
      if (starts_with(s, ws)) { s.remove_prefix(ws.size()); changed = true; }
      if (ends_with(s, ws)) { s.remove_suffix(ws.size()); changed = true; }
    }
  }
  return s;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = false;
  for (char c : s) {
    if (is_space(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

std::string canonicalize(std::string_view name) {
  std::string_view s = name;
  bool changed = true;
  while (changed) {
    changed = false;
    auto t = trim(s);
    if (t.size() != s.size()) { s = t; changed = true; }
    if (auto n = leading_quote_len(s); n > 0) { s.remove_prefix(n); changed = true; }
    if (auto n = trailing_quote_len(s); n > 0) { s.remove_suffix(n); changed = true; }
  }
  return ascii_lower(collapse_whitespace(s));
}

std::string clean_cell(std::string_view cell) {
  std::string_view s = cell;
  while (true) {
    auto before = s.size();
    s = trim(s);
    s = strip_outer_quotes(s);
    s = trim(s);
    s = strip_trailing_punct(s);
    if (s.size() == before) break;
  }
  return std::string(s);
}

std::string normalize_punctuation(std::string_view s) {
  static const std::array<std::pair<std::string_view, char>, 10> kMap = {{
      {"\xEF\xBC\x8C", ','},  // ，
      {"\xEF\xBC\x88", '('},  // （
      {"\xEF\xBC\x89", ')'},  // ）
      {"\xEF\xBC\xBB", '['},  // ［
      {"\xEF\xBC\xBD", ']'},  // ］
      {"\xE3\x80\x90", '['},  // 【
      {"\xE3\x80\x91", ']'},  // 】
      {"\xEF\xBC\x9B", ';'},  // ；
      {"\xEF\xBD\x9C", '|'},  // ｜
      {"\xE3\x80\x81", ','},  // 、
  }};
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    bool mapped = false;
    if (static_cast<unsigned char>(s[i]) >= 0xE0) {
      for (const auto& [from, to] : kMap) {
        if (s.substr(i, from.size()) == from) {
          out.push_back(to);
          i += from.size();
          mapped = true;
          break;
        }
      }
    }
    if (!mapped) out.push_back(s[i++]);
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : s) {
    if (c == '\r') continue;
    if (c == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  lines.push_back(std::move(cur));
  return lines;
}

std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c < 0xF8) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

bool contains_cjk(std::string_view s) {
  for (const auto& ch : utf8_chars(s)) {
    if (ch.size() != 3) continue;
    std::uint32_t cp = ((static_cast<unsigned char>(ch[0]) & 0x0F) << 12) |
                       ((static_cast<unsigned char>(ch[1]) & 0x3F) << 6) |
                       (static_cast<unsigned char>(ch[2]) & 0x3F);
    if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF)) return true;
  }
  return false;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::vector<std::string> split_fields(std::string_view s, char delim) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (true) {
    std::size_t start = i;
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t end = std::string_view::npos;
    for (const auto& [open, close] : kQuotePairs) {
      if (s.substr(i, open.size()) != open) continue;
      // Find a closing quote followed by optional whitespace and the
      // delimiter or end of input.
      std::size_t pos = i + open.size();
      while ((pos = s.find(close, pos)) != std::string_view::npos) {
        std::size_t after = pos + close.size();
        std::size_t k = after;
        while (k < s.size() && is_space(s[k])) ++k;
        if (k == s.size() || s[k] == delim) {
          end = k;
          break;
        }
        pos = after;
      }
      if (end != std::string_view::npos) break;
    }
    if (end == std::string_view::npos) {
      end = s.find(delim, i);
      if (end == std::string_view::npos) end = s.size();
    }
    fields.emplace_back(s.substr(start, end - start));
    if (end >= s.size()) break;
    i = end + 1;
  }
  return fields;
}

}  // namespace mtie::text
