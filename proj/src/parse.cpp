#include "mtie/parse.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "mtie/error.hpp"
#include "mtie/text.hpp"

namespace mtie {

namespace {

using text::canonicalize;
using text::clean_cell;
using text::trim;

enum class RowKind { Pipe, Group, Delimited, Prose };

struct Row {
  RowKind kind;
  std::vector<std::string> cells;  // raw, uncleaned
  std::size_t line;                // 1-based
};

bool is_alignment_cell(std::string_view cell) {
  auto c = trim(cell);
  if (c.empty()) return false;
  std::size_t dashes = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == '-') ++dashes;
    else if (c[i] == ':' && (i == 0 || i + 1 == c.size())) continue;
    else return false;
  }
  return dashes >= 1;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && text::ascii_lower(s.substr(0, prefix.size())) == prefix;
}

// Closing index (one past the closing quote) of a quoted run starting at i,
// or npos. Quotes close only before a structural character or end of line.
std::size_t quoted_run_end(std::string_view t, std::size_t i) {
  static const std::pair<std::string_view, std::string_view> kPairs[] = {
      {"'", "'"}, {"\"", "\""}, {"`", "'"}, {"`", "`"},
      {"\xE2\x80\x98", "\xE2\x80\x99"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}};
  for (const auto& [open, close] : kPairs) {
    if (t.substr(i, open.size()) != open) continue;
    std::size_t pos = i + open.size();
    while ((pos = t.find(close, pos)) != std::string_view::npos) {
      if (pos > 0 && t[pos - 1] == '\\') {
        pos += close.size();
        continue;
      }
      std::size_t after = pos + close.size();
      std::size_t k = after;
      while (k < t.size() && text::is_space(t[k])) ++k;
      if (k == t.size() || t[k] == ',' || t[k] == ')' || t[k] == ']' || t[k] == '}' || t[k] == ':' || t[k] == '|') {
        return after;
      }
      pos = after;
    }
  }
  return std::string_view::npos;
}

bool quote_may_open(std::string_view t, std::size_t i) {
  std::size_t k = i;
  while (k > 0 && text::is_space(t[k - 1])) --k;
  return k == 0 || t[k - 1] == '(' || t[k - 1] == '[' || t[k - 1] == ',' || t[k - 1] == '{' || t[k - 1] == ':' ||
         t[k - 1] == '|';
}

// Contents of the innermost (...) / [...] groups on a line.
std::vector<std::string_view> innermost_groups(std::string_view t) {
  struct Open {
    char ch;
    std::size_t at;
    bool has_child;
  };
  std::vector<Open> stack;
  std::vector<std::string_view> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    if (quote_may_open(t, i)) {
      auto end = quoted_run_end(t, i);
      if (end != std::string_view::npos) {
        i = end - 1;
        continue;
      }
    }
    if (c == '(' || c == '[') {
      if (!stack.empty()) stack.back().has_child = true;
      stack.push_back({c, i, false});
    } else if ((c == ')' || c == ']') && !stack.empty()) {
      char want = c == ')' ? '(' : '[';
      if (stack.back().ch != want) continue;
      auto open = stack.back();
      stack.pop_back();
      if (!open.has_child) out.push_back(t.substr(open.at + 1, i - open.at - 1));
    }
  }
  return out;
}

std::vector<Row> extract_rows(std::string_view reply) {
  std::vector<Row> rows;
  auto lines = text::split_lines(reply);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    auto t = trim(lines[n]);
    if (t.empty()) continue;
    if (t.find('|') != std::string_view::npos) {
      auto cells = text::split_fields(t, '|');
      if (!cells.empty() && trim(cells.front()).empty()) cells.erase(cells.begin());
      if (!cells.empty() && trim(cells.back()).empty()) cells.pop_back();
      if (cells.empty()) continue;
      if (std::all_of(cells.begin(), cells.end(), [](const std::string& c) { return is_alignment_cell(c); })) continue;
      rows.push_back({RowKind::Pipe, std::move(cells), n + 1});
      continue;
    }
    bool grouped = false;
    for (auto g : innermost_groups(t)) {
      auto cells = text::split_fields(g, ',');
      if (cells.size() < 2) continue;
      rows.push_back({RowKind::Group, std::move(cells), n + 1});
      grouped = true;
    }
    if (grouped) continue;
    if (t.back() == ':') {
      rows.push_back({RowKind::Prose, {std::string(t)}, n + 1});
      continue;
    }
    if (t.find('\t') != std::string_view::npos) {
      rows.push_back({RowKind::Delimited, text::split_fields(t, '\t'), n + 1});
    } else if (t.find(',') != std::string_view::npos) {
      rows.push_back({RowKind::Delimited, text::split_fields(t, ','), n + 1});
    } else {
      rows.push_back({RowKind::Prose, {std::string(t)}, n + 1});
    }
  }
  return rows;
}

std::vector<std::string> cleaned(const std::vector<std::string>& cells) {
  std::vector<std::string> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(clean_cell(c));
  return out;
}

bool any_empty(const std::vector<std::string>& cells) {
  return std::any_of(cells.begin(), cells.end(), [](const std::string& c) { return c.empty(); });
}

bool all_none(const std::vector<std::string>& cells) {
  return std::all_of(cells.begin(), cells.end(), [](const std::string& c) { return is_none_signal(c); });
}

std::string row_ref(const Row& row) { return "line " + std::to_string(row.line); }

const std::string* match_inventory(const std::vector<std::string>& inventory, std::string_view name) {
  auto key = canonicalize(name);
  for (const auto& n : inventory) {
    if (canonicalize(n) == key) return &n;
  }
  return nullptr;
}

bool looks_like_type_name(std::string_view token) {
  if (token.size() > 64) return false;
  auto words = text::collapse_whitespace(token);
  return std::count(words.begin(), words.end(), ' ') < 4;
}

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

// Inventory names mentioned anywhere in prose, in order of appearance.
std::vector<std::string> scan_prose(std::string_view reply, const std::vector<std::string>& inventory) {
  auto hay = text::ascii_lower(reply);
  std::vector<std::pair<std::size_t, std::string>> found;
  for (const auto& name : inventory) {
    auto needle = text::ascii_lower(name);
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
      bool left = pos == 0 || !is_name_char(hay[pos - 1]);
      bool right = pos + needle.size() == hay.size() || !is_name_char(hay[pos + needle.size()]);
      if (left && right) {
        found.emplace_back(pos, name);
        break;
      }
      ++pos;
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (auto& [_, n] : found) out.push_back(std::move(n));
  return out;
}

std::string_view strip_bullet(std::string_view t) {
  t = trim(t);
  if (t.size() >= 2 && (t[0] == '-' || t[0] == '*' || t[0] == '+') && text::is_space(t[1])) return trim(t.substr(2));
  if (t.substr(0, 3) == "\xE2\x80\xA2") return trim(t.substr(3));  // •
  std::size_t k = 0;
  while (k < t.size() && t[k] >= '0' && t[k] <= '9') ++k;
  if (k > 0 && k < t.size() && (t[k] == '.' || t[k] == ')') && k + 1 < t.size() && text::is_space(t[k + 1])) {
    return trim(t.substr(k + 1));
  }
  return t;
}

ParsedAnswer parse_types(std::string_view raw, const std::vector<std::string>& inventory) {
  if (inventory.empty()) throw Error(ErrorCode::Unparseable, "empty type inventory");
  if (is_none_signal(raw)) return {NoneAnswer{}, {}};
  auto reply = preprocess_reply(raw);

  std::string flat;
  for (char c : reply) {
    if (c == '(' || c == ')' || c == '[' || c == ']' || c == '{' || c == '}') flat.push_back(' ');
    else if (c == ';' || c == '\n' || c == '|') flat.push_back(',');
    else flat.push_back(c);
  }
  ParsedAnswer out{TypeList{}, {}};
  auto& list = std::get<TypeList>(out.value);
  std::vector<std::string> tokens;
  for (const auto& field : text::split_fields(flat, ',')) {
    auto token = clean_cell(strip_bullet(field));
    if (!token.empty() && !is_none_signal(token)) tokens.push_back(std::move(token));
  }
  std::vector<std::string> unknown;
  for (const auto& token : tokens) {
    if (const auto* name = match_inventory(inventory, token)) {
      if (std::find(list.names.begin(), list.names.end(), *name) == list.names.end()) list.names.push_back(*name);
    } else {
      unknown.push_back(token);
    }
  }
  if (list.names.empty()) {
    list.names = scan_prose(reply, inventory);
    if (!list.names.empty()) {
      out.warnings.push_back("type names recovered from free text");
      return out;
    }
    if (tokens.empty() || std::none_of(tokens.begin(), tokens.end(), looks_like_type_name)) {
      throw Error(ErrorCode::Unparseable, "no type names found in reply");
    }
  }
  for (const auto& u : unknown) out.warnings.push_back("dropped name outside the inventory: '" + u + "'");
  return out;
}

// ---- record-style role replies ----------------------------------------

enum class Tok { String, Bare, Punct };

struct Token {
  Tok kind;
  std::string text;
};

std::vector<Token> tokenize_record(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto curly_close = [&](std::size_t at) -> std::pair<std::size_t, std::size_t> {
    // returns (content_end, after_close) for a “...” run
    auto pos = s.find("\xE2\x80\x9D", at);
    if (pos == std::string_view::npos) return {s.size(), s.size()};
    return {pos, pos + 3};
  };
  while (i < s.size()) {
    char c = s[i];
    if (text::is_space(c)) {
      ++i;
    } else if (c == '{' || c == '}' || c == '[' || c == ']' || c == ':' || c == ',') {
      out.push_back({Tok::Punct, std::string(1, c)});
      ++i;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != c) {
        if (s[j] == '\\' && j + 1 < s.size()) ++j;
        ++j;
      }
      out.push_back({Tok::String, std::string(s.substr(i + 1, j - i - 1))});
      i = std::min(j + 1, s.size());
    } else if (s.substr(i, 3) == "\xE2\x80\x9C") {
      auto [end, after] = curly_close(i + 3);
      out.push_back({Tok::String, std::string(s.substr(i + 3, end - i - 3))});
      i = after;
    } else {
      std::size_t j = i;
      while (j < s.size() && !text::is_space(s[j]) && std::string_view("{}[]:,\"").find(s[j]) == std::string_view::npos) ++j;
      out.push_back({Tok::Bare, std::string(s.substr(i, j - i))});
      i = j;
    }
  }
  return out;
}

enum class Key { Role, Content, Event, Other };

Key classify_key(std::string_view key) {
  static const std::set<std::string> kRole = {"role", "argument role", "argument_role", "角色", "论元角色"};
  static const std::set<std::string> kContent = {"argument", "content", "argument content", "argument_content",
                                                 "text", "论元", "论元内容"};
  static const std::set<std::string> kEvent = {"event_type", "event type", "type", "事件类型"};
  auto k = canonicalize(key);
  if (kRole.count(k)) return Key::Role;
  if (kContent.count(k)) return Key::Content;
  if (kEvent.count(k)) return Key::Event;
  return Key::Other;
}

struct RecordRow {
  std::string event_type;
  std::string role;
  std::optional<std::string> content;
};

// Walks `"key": "value"` pairs; every object that names a role becomes a row.
std::vector<RecordRow> parse_records(std::string_view reply) {
  auto toks = tokenize_record(reply);
  struct Obj {
    std::optional<std::string> role, content, event;
  };
  std::vector<Obj> stack;
  std::string context_event;
  std::vector<RecordRow> rows;
  auto close_obj = [&]() {
    auto obj = stack.back();
    stack.pop_back();
    if (obj.role) {
      rows.push_back({obj.event ? *obj.event : context_event, *obj.role, obj.content});
    } else if (obj.event) {
      context_event = *obj.event;
    }
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.kind == Tok::Punct && t.text == "{") {
      stack.push_back({});
      continue;
    }
    if (t.kind == Tok::Punct && t.text == "}") {
      if (!stack.empty()) close_obj();
      continue;
    }
    if (t.kind != Tok::String || i + 2 >= toks.size() + 0 || i + 1 >= toks.size()) continue;
    if (toks[i + 1].kind != Tok::Punct || toks[i + 1].text != ":") continue;
    if (i + 2 >= toks.size()) break;
    const auto& v = toks[i + 2];
    if (v.kind == Tok::Punct) continue;
    auto key = classify_key(t.text);
    std::optional<std::string> value = v.text;
    if (v.kind == Tok::Bare && (v.text == "null" || v.text == "None")) value = std::nullopt;
    i += 2;
    if (key == Key::Other) continue;
    if (stack.empty()) {
      if (key == Key::Event && value) context_event = *value;
      else if (key == Key::Role && value) stack.push_back({value, std::nullopt, std::nullopt});
      continue;
    }
    auto& obj = stack.back();
    if (key == Key::Role) {
      if (obj.role) {
        // A second role inside one object starts a new row.
        close_obj();
        stack.push_back({});
      }
      stack.back().role = value;
    } else if (key == Key::Content) {
      obj.content = value;
    } else {
      obj.event = value;
    }
  }
  while (!stack.empty()) close_obj();
  return rows;
}

bool is_role_header_word(std::string_view cell) {
  static const std::set<std::string> kWords = {"event type", "event_type", "argument role", "argument content",
                                               "role", "content", "argument", "事件类型", "论元角色", "论元内容"};
  return kWords.count(canonicalize(cell)) > 0;
}

std::string squeeze(std::string_view s) {
  std::string out;
  for (char c : canonicalize(s)) {
    if (c != ' ') out.push_back(c);
  }
  return out;
}

}  // namespace

bool is_none_signal(std::string_view reply) {
  static const std::set<std::string> kNone = {"none", "null", "n/a", "nothing", "no", "无", "没有", "空"};
  std::string v = preprocess_reply(reply);
  bool bracketed = false;
  while (true) {
    auto before = v;
    v = clean_cell(v);
    if (v.size() >= 2 && ((v.front() == '(' && v.back() == ')') || (v.front() == '[' && v.back() == ']'))) {
      v = v.substr(1, v.size() - 2);
      bracketed = true;
    }
    if (v == before) break;
  }
  if (v.empty()) return bracketed;
  return kNone.count(text::ascii_lower(v)) > 0;
}

std::string preprocess_reply(std::string_view reply) {
  std::string out;
  for (const auto& line : text::split_lines(reply)) {
    auto t = trim(line);
    if (t.substr(0, 3) == "```") continue;
    if (!out.empty()) out.push_back('\n');
    out += line;
  }
  out = text::normalize_punctuation(out);
  auto t = trim(out);
  for (std::string_view label : {"output:", "answer:", "response:", "答案:", "回答:"}) {
    if (starts_with_ci(t, label)) {
      t = trim(t.substr(label.size()));
      break;
    }
  }
  return std::string(t);
}

ParsedAnswer parse_type_list(std::string_view reply, const std::vector<std::string>& inventory) {
  return parse_types(reply, inventory);
}

ParsedAnswer parse_event_types(std::string_view reply, const std::vector<std::string>& inventory) {
  return parse_types(reply, inventory);
}

ParsedAnswer parse_pair_table(std::string_view raw, const std::pair<std::string, std::string>& header) {
  if (is_none_signal(raw)) return {NoneAnswer{}, {}};
  auto reply = preprocess_reply(raw);
  ParsedAnswer out{PairTable{header, {}}, {}};
  auto& table = std::get<PairTable>(out.value);
  std::size_t structured = 0, bad = 0;
  for (const auto& row : extract_rows(reply)) {
    if (row.kind == RowKind::Prose) {
      out.warnings.push_back(row_ref(row) + ": ignored text outside the table");
      continue;
    }
    ++structured;
    auto cells = cleaned(row.cells);
    if (all_none(cells)) continue;
    if (cells.size() != 2 || any_empty(cells)) {
      ++bad;
      out.warnings.push_back(row_ref(row) + ": expected 2 cells, got " + std::to_string(cells.size()));
      continue;
    }
    if (canonicalize(cells[0]) == canonicalize(header.first) && canonicalize(cells[1]) == canonicalize(header.second)) {
      continue;
    }
    if (is_none_signal(cells[0]) || is_none_signal(cells[1])) continue;
    table.rows.emplace_back(std::move(cells[0]), std::move(cells[1]));
  }
  if (structured == 0) throw Error(ErrorCode::Unparseable, "no table rows found in reply");
  if (table.rows.empty() && bad > 0) throw Error(ErrorCode::ArityMismatch, "no row has exactly two cells");
  return out;
}

ParsedAnswer parse_entity_list(std::string_view raw, const std::vector<std::string>& inventory) {
  if (is_none_signal(raw)) return {NoneAnswer{}, {}};
  auto reply = preprocess_reply(raw);
  ParsedAnswer out{EntityList{}, {}};
  auto& list = std::get<EntityList>(out.value);
  std::size_t structured = 0, bad = 0, good = 0;
  for (const auto& row : extract_rows(reply)) {
    if (row.kind == RowKind::Prose) {
      out.warnings.push_back(row_ref(row) + ": ignored text outside the list");
      continue;
    }
    ++structured;
    auto cells = cleaned(row.cells);
    if (all_none(cells)) continue;
    if (cells.size() != 2 || any_empty(cells)) {
      ++bad;
      out.warnings.push_back(row_ref(row) + ": expected [name, type], got " + std::to_string(cells.size()) + " cells");
      continue;
    }
    ++good;
    if (is_none_signal(cells[0])) continue;
    const auto* type = match_inventory(inventory, cells[1]);
    if (!type) {
      out.warnings.push_back(row_ref(row) + ": dropped entity with unknown type '" + cells[1] + "'");
      continue;
    }
    list.items.emplace_back(std::move(cells[0]), *type);
  }
  if (structured == 0) throw Error(ErrorCode::Unparseable, "no [name, type] pairs found in reply");
  if (good == 0 && bad > 0) throw Error(ErrorCode::ArityMismatch, "no pair has exactly two cells");
  return out;
}

ParsedAnswer parse_role_table(std::string_view raw, std::string_view event_type, const std::vector<std::string>& roles) {
  if (roles.empty()) throw Error(ErrorCode::Unparseable, "empty role list");
  if (is_none_signal(raw)) return {NoneAnswer{}, {}};
  auto reply = preprocess_reply(raw);
  ParsedAnswer out{RoleTable{}, {}};
  auto& table = std::get<RoleTable>(out.value);

  auto add_row = [&](std::string_view where, std::string_view ev, std::string_view role, std::string_view content) {
    auto c = clean_cell(content);
    if (c.empty() || is_none_signal(c)) return;
    if (!ev.empty() && squeeze(ev) != squeeze(event_type)) {
      out.warnings.push_back(std::string(where) + ": event type '" + std::string(ev) + "' differs from the asked '" +
                             std::string(event_type) + "'");
    }
    const auto* r = match_inventory(roles, role);
    if (!r) {
      out.warnings.push_back(std::string(where) + ": dropped unknown role '" + clean_cell(role) + "'");
      return;
    }
    table.rows.push_back({std::string(event_type), *r, std::move(c)});
  };

  auto records = parse_records(reply);
  if (!records.empty()) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& rec = records[i];
      if (!rec.content) continue;
      add_row("record " + std::to_string(i + 1), clean_cell(rec.event_type), clean_cell(rec.role), *rec.content);
    }
    return out;
  }

  std::size_t structured = 0, bad = 0;
  for (const auto& row : extract_rows(reply)) {
    if (row.kind == RowKind::Prose) {
      out.warnings.push_back(row_ref(row) + ": ignored text outside the table");
      continue;
    }
    ++structured;
    auto cells = cleaned(row.cells);
    if (std::all_of(cells.begin(), cells.end(), [](const std::string& c) { return is_role_header_word(c); })) continue;
    if (cells.size() == 3 && !cells[0].empty() && !cells[1].empty()) {
      add_row(row_ref(row), cells[0], cells[1], row.cells[2]);
    } else if (cells.size() == 2 && !cells[0].empty()) {
      add_row(row_ref(row), "", cells[0], row.cells[1]);
    } else {
      ++bad;
      out.warnings.push_back(row_ref(row) + ": expected 3 cells, got " + std::to_string(cells.size()));
    }
  }
  if (structured == 0) throw Error(ErrorCode::Unparseable, "no argument table found in reply");
  if (structured == bad) throw Error(ErrorCode::ArityMismatch, "no row has (event type, role, content) cells");
  return out;
}

}  // namespace mtie
