#pragma once

#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace mtie {

struct TypeList {
  std::vector<std::string> names;  // inventory spellings, deduplicated, reply order
  bool operator==(const TypeList&) const = default;
};

struct PairTable {
  std::pair<std::string, std::string> header;
  std::vector<std::pair<std::string, std::string>> rows;
  bool operator==(const PairTable&) const = default;
};

struct EntityList {
  std::vector<std::pair<std::string, std::string>> items;  // (name, type)
  bool operator==(const EntityList&) const = default;
};

struct RoleRow {
  std::string event_type;
  std::string role;
  std::string content;
  bool operator==(const RoleRow&) const = default;
};

struct RoleTable {
  std::vector<RoleRow> rows;
  bool operator==(const RoleTable&) const = default;
};

struct NoneAnswer {
  bool operator==(const NoneAnswer&) const = default;
};

// A parsed reply plus the non-fatal problems met on the way (dropped
// out-of-inventory names, malformed rows, ignored prose lines).
struct ParsedAnswer {
  std::variant<TypeList, PairTable, EntityList, RoleTable, NoneAnswer> value;
  std::vector<std::string> warnings;

  bool is_none() const { return std::holds_alternative<NoneAnswer>(value); }
  template <typename T>
  const T& as() const { return std::get<T>(value); }
};

// True when the whole reply is an explicit "nothing here" answer: none, null,
// n/a, nothing, no, 无, 没有, 空, or an empty () / []; optionally quoted,
// bracketed and followed by a full stop. See docs/answer-grammar.md.
bool is_none_signal(std::string_view reply);

// Reply text after the shared preprocessing every parser applies: code fences
// removed and full-width punctuation mapped to ASCII.
std::string preprocess_reply(std::string_view reply);

// Relation / entity-type question: "(a, b)", "a, b", one name per line,
// bulleted or numbered lists. Names outside `inventory` are dropped with a
// warning. Throws Unparseable when nothing in the reply resembles a type name.
ParsedAnswer parse_type_list(std::string_view reply, const std::vector<std::string>& inventory);

// As parse_type_list, for event classification replies.
ParsedAnswer parse_event_types(std::string_view reply, const std::vector<std::string>& inventory);

// Two-column table: "(s, o)" rows (several per line allowed), "s, o" or
// tab-separated lines, and pipe-drawn tables with optional alignment rows.
// A row equal to `header` is dropped. Throws Unparseable (no rows) or
// ArityMismatch (rows exist but none has two cells).
ParsedAnswer parse_pair_table(std::string_view reply, const std::pair<std::string, std::string>& header);

// ['name', 'type'] pairs (any bracket or quote style, optionally nested in an
// outer list), plus the pair-table row syntaxes. Types are matched against
// `inventory`; unknown types are dropped with a warning.
ParsedAnswer parse_entity_list(std::string_view reply, const std::vector<std::string>& inventory);

// Pipe-drawn or delimiter tables with (event type, role, content) or
// (role, content) rows, and record-style replies such as
//   "arguments": [{"role": "Victim", "argument": "..."}]
// Rows whose content is "None" are dropped; roles are matched against `roles`.
ParsedAnswer parse_role_table(std::string_view reply, std::string_view event_type,
                              const std::vector<std::string>& roles);

}  // namespace mtie
