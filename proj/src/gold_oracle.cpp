#include <algorithm>
#include <set>

#include "mtie/chat.hpp"
#include "mtie/error.hpp"
#include "mtie/parse.hpp"
#include "mtie/text.hpp"

namespace mtie {

namespace {

[[noreturn]] void unsupported(const std::string& what) { throw Error(ErrorCode::UnsupportedForm, what); }

std::string none_token(Language lang) { return lang == Language::ZH ? "无" : "none"; }

bool needs_pipe(std::string_view cell) {
  auto c = text::normalize_punctuation(cell);
  return c.find_first_of(",()[]\t") != std::string::npos;
}

void check_cell(std::string_view cell) {
  if (text::trim(cell).empty()) unsupported("empty cell");
  if (cell.find('\n') != std::string_view::npos || cell.find('\r') != std::string_view::npos) {
    unsupported("cell spans lines: '" + std::string(cell) + "'");
  }
  if (is_none_signal(cell)) unsupported("cell reads as a none answer: '" + std::string(cell) + "'");
}

bool is_dash_run(std::string_view cell) {
  auto t = text::trim(cell);
  return !t.empty() && t.find_first_not_of("-:") == std::string_view::npos;
}

std::string pipe_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) {
    if (text::normalize_punctuation(c).find('|') != std::string::npos) unsupported("cell contains '|': '" + c + "'");
    if (is_dash_run(c)) unsupported("cell looks like a table rule: '" + c + "'");
    out += " " + c + " |";
  }
  return out;
}

std::string pipe_rule(std::size_t columns) {
  std::string out = "|";
  for (std::size_t i = 0; i < columns; ++i) out += "---|";
  return out;
}

std::string pair_table(const std::vector<std::pair<std::string, std::string>>& rows,
                       const std::pair<std::string, std::string>& header, Language lang) {
  if (rows.empty()) return none_token(lang);
  bool pipe = false;
  for (const auto& [a, b] : rows) {
    check_cell(a);
    check_cell(b);
    if (text::canonicalize(a) == text::canonicalize(header.first) &&
        text::canonicalize(b) == text::canonicalize(header.second)) {
      unsupported("row repeats the table header");
    }
    pipe = pipe || needs_pipe(a) || needs_pipe(b);
  }
  std::string out;
  if (pipe) {
    out = pipe_row({header.first, header.second}) + "\n" + pipe_rule(2);
    for (const auto& [a, b] : rows) out += "\n" + pipe_row({a, b});
    return out;
  }
  for (const auto& [a, b] : rows) {
    if (!out.empty()) out += "\n";
    out += "(" + a + ", " + b + ")";
  }
  return out;
}

std::string quoted_item(const std::string& s) {
  for (char q : {'\'', '"'}) {
    if (s.find(q) == std::string::npos) return std::string(1, q) + s + q;
  }
  unsupported("name contains both quote characters: '" + s + "'");
}

std::string type_list(const std::vector<std::string>& inventory, const std::set<std::string>& present,
                      std::string_view sep, bool parenthesised, Language lang) {
  std::vector<std::string> names;
  for (const auto& n : inventory) {
    if (present.count(n)) names.push_back(n);
  }
  for (const auto& p : present) {
    if (std::find(inventory.begin(), inventory.end(), p) == inventory.end()) {
      unsupported("gold type '" + p + "' is not in the inventory");
    }
  }
  if (names.empty()) return none_token(lang);
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += sep;
    out += n;
  }
  return parenthesised ? "(" + out + ")" : out;
}

std::vector<Triple> canonical_triples(const GoldAnnotation& gold, const TaskSchema& schema) {
  std::vector<Triple> out;
  for (const auto& t : gold.triples()) out.push_back(to_canonical_direction(t, schema));
  return out;
}

std::string relation_reply(const RenderedPrompt& prompt, const GoldAnnotation& gold, const TaskSchema& schema) {
  const auto& ctx = prompt.context;
  auto triples = canonical_triples(gold, schema);
  if (ctx.stage == Stage::I) {
    std::set<std::string> present;
    for (const auto& t : triples) present.insert(t.relation);
    return type_list(ctx.inventory, present, ", ", true, schema.language);
  }
  std::vector<std::pair<std::string, std::string>> rows;
  if (ctx.attribute.empty()) {
    for (const auto& t : triples) {
      if (t.relation != ctx.element_type) continue;
      std::pair<std::string, std::string> row{t.subject, t.object};
      if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
    }
    return pair_table(rows, ctx.header, schema.language);
  }
  for (std::size_t i = 0; i < ctx.groups.size(); ++i) {
    const auto& [s, o] = ctx.groups[i];
    for (const auto& t : triples) {
      if (t.relation != ctx.element_type || t.subject != s || t.object != o) continue;
      auto it = t.attributes.find(ctx.attribute);
      if (it != t.attributes.end()) {
        rows.emplace_back(std::to_string(i + 1), it->second);
        break;
      }
    }
  }
  return pair_table(rows, ctx.header, schema.language);
}

std::string entity_reply(const RenderedPrompt& prompt, const GoldAnnotation& gold, const TaskSchema& schema) {
  const auto& ctx = prompt.context;
  if (ctx.stage == Stage::I) {
    std::set<std::string> present;
    for (const auto& e : gold.entities()) present.insert(e.type);
    return type_list(ctx.inventory, present, ", ", false, schema.language);
  }
  std::string out;
  for (const auto& e : gold.entities()) {
    if (e.type != ctx.element_type) continue;
    check_cell(e.name);
    if (text::normalize_punctuation(e.name).find('|') != std::string::npos) {
      unsupported("entity name contains '|': '" + e.name + "'");
    }
    if (!out.empty()) out += ", ";
    out += "[" + quoted_item(e.name) + ", " + quoted_item(e.type) + "]";
  }
  return out.empty() ? none_token(schema.language) : out;
}

std::string event_reply(const RenderedPrompt& prompt, const GoldAnnotation& gold, const TaskSchema& schema) {
  const auto& ctx = prompt.context;
  if (ctx.stage == Stage::I) {
    std::set<std::string> present;
    for (const auto& e : gold.events()) present.insert(e.event_type);
    return type_list(ctx.inventory, present, "\n", false, schema.language);
  }
  std::vector<Argument> args;
  for (const auto& e : gold.events()) {
    if (e.event_type == ctx.element_type) args.insert(args.end(), e.arguments.begin(), e.arguments.end());
  }
  for (const auto& a : args) {
    if (std::find(ctx.roles.begin(), ctx.roles.end(), a.role) == ctx.roles.end()) {
      unsupported("role '" + a.role + "' is not asked for " + ctx.element_type);
    }
  }
  bool zh = schema.language == Language::ZH;
  std::string out = zh ? pipe_row({"事件类型", "论元角色", "论元内容"}) : pipe_row({"event type", "argument role", "argument content"});
  out += "\n" + pipe_rule(3);
  for (const auto& role : ctx.roles) {
    bool any = false;
    for (const auto& a : args) {
      if (a.role != role) continue;
      check_cell(a.content);
      out += "\n" + pipe_row({ctx.element_type, role, a.content});
      any = true;
    }
    if (!any) out += "\n" + pipe_row({ctx.element_type, role, "None"});
  }
  return out;
}

}  // namespace

std::string gold_oracle_reply(const Conversation&, const RenderedPrompt& prompt, const GoldAnnotation& gold,
                              const TaskSchema& schema) {
  if (prompt.context.task != gold.task()) unsupported("question and gold annotation are for different tasks");
  switch (gold.task()) {
    case Task::RE: return relation_reply(prompt, gold, schema);
    case Task::NER: return entity_reply(prompt, gold, schema);
    case Task::EE: return event_reply(prompt, gold, schema);
  }
  unsupported("unknown task");
}

GoldOracleBackend::GoldOracleBackend(const TaskSchema& schema, const std::vector<Sample>& samples) : schema_(schema) {
  for (const auto& s : samples) {
    if (s.gold) gold_.emplace(s.id, *s.gold);
  }
}

std::string GoldOracleBackend::reply(const Conversation& conversation, const RenderedPrompt& prompt) {
  auto it = gold_.find(conversation.id());
  if (it == gold_.end()) unsupported("no gold annotation for sample '" + conversation.id() + "'");
  ++requests_;
  return gold_oracle_reply(conversation, prompt, it->second, schema_);
}

}  // namespace mtie
