#include "mtie/schema.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "mtie/error.hpp"
#include "mtie/templates.hpp"
#include "mtie/text.hpp"

namespace mtie {

namespace {

const std::set<std::string> kTopLevelFields = {"name",        "task",    "language",          "relations",
                                                "entities",    "events",  "skip_stage1",       "inverse_relations",
                                                "aliases",     "role_aliases"};

[[noreturn]] void invalid(std::string_view rule, const std::string& what) {
  throw Error(ErrorCode::InvalidSchema, "[" + std::string(rule) + "] " + what);
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedSchema, what); }

void check_identifier(const std::string& name, std::string_view what) {
  static constexpr std::string_view kForbidden = ",()[]{}|'\"`\n\r\t";
  if (name.empty() || text::trim(name).size() != name.size() ||
      name.find_first_of(kForbidden) != std::string::npos) {
    invalid("identifier-charset", std::string(what) + " '" + name +
                                      "' must be non-empty, carry no surrounding whitespace and avoid ,()[]{}|'\"` and control characters");
  }
}

void check_unique(const std::vector<std::string>& names, std::string_view rule, std::string_view what) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(text::canonicalize(n)).second) invalid(rule, "duplicate " + std::string(what) + " '" + n + "'");
  }
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, std::string_view where) {
  if (!node.IsMap()) malformed(std::string(where) + " must be a mapping");
  for (const auto& kv : node) {
    auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) malformed("unknown field '" + key + "' in " + std::string(where));
  }
}

std::string scalar(const YAML::Node& node, std::string_view where) {
  if (!node || !node.IsScalar()) malformed(std::string(where) + " must be a scalar");
  return node.as<std::string>();
}

std::vector<std::string> string_list(const YAML::Node& node, std::string_view where) {
  if (!node.IsSequence()) malformed(std::string(where) + " must be a list");
  std::vector<std::string> out;
  for (const auto& item : node) out.push_back(scalar(item, where));
  return out;
}

std::map<std::string, std::string> string_map(const YAML::Node& node, std::string_view where) {
  if (!node.IsMap()) malformed(std::string(where) + " must be a mapping");
  std::map<std::string, std::string> out;
  for (const auto& kv : node) out[kv.first.as<std::string>()] = scalar(kv.second, where);
  return out;
}

template <typename T, typename Name>
const T* find_canonical(const std::vector<T>& items, std::string_view name, Name&& name_of) {
  auto key = text::canonicalize(name);
  for (const auto& item : items) {
    if (text::canonicalize(name_of(item)) == key) return &item;
  }
  return nullptr;
}

const std::string* find_in_map(const std::map<std::string, std::string>& m, std::string_view label) {
  auto key = text::canonicalize(label);
  for (const auto& [from, to] : m) {
    if (text::canonicalize(from) == key) return &to;
  }
  return nullptr;
}

TaskSchema schema_from_yaml(const YAML::Node& root) {
  check_keys(root, kTopLevelFields, "schema");
  TaskSchema schema;
  if (!root["task"]) malformed("schema is missing 'task'");
  if (!root["language"]) malformed("schema is missing 'language'");
  try {
    schema.task = parse_task(scalar(root["task"], "task"));
    schema.language = parse_language(scalar(root["language"], "language"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedSchema) throw;
    malformed(e.detail());
  }
  if (root["name"]) schema.name = scalar(root["name"], "name");

  if (const auto rels = root["relations"]) {
    if (!rels.IsSequence()) malformed("'relations' must be a list");
    for (const auto& r : rels) {
      check_keys(r, {"name", "subject_type", "object_type", "object_chain"}, "relation");
      RelationType rel;
      rel.name = scalar(r["name"], "relation name");
      rel.subject_type = scalar(r["subject_type"], "relation subject_type");
      rel.object_type = scalar(r["object_type"], "relation object_type");
      if (const auto chain = r["object_chain"]) {
        if (!chain.IsSequence()) malformed("'object_chain' must be a list");
        for (const auto& a : chain) {
          check_keys(a, {"attribute", "template"}, "object_chain entry");
          AttributeSpec spec;
          spec.attribute_name = scalar(a["attribute"], "attribute");
          spec.question_template_id = a["template"] ? scalar(a["template"], "template")
                                                    : TemplateRegistry::attribute_template_id(schema.language);
          rel.object_chain.push_back(std::move(spec));
        }
        if (rel.object_chain.empty()) invalid("object-chain-nonempty", "relation '" + rel.name + "' has an empty object_chain");
      }
      schema.relations.push_back(std::move(rel));
    }
  }
  if (const auto ents = root["entities"]) {
    schema.entities = EntityTypeInventory{string_list(ents, "entities")};
  }
  if (const auto evs = root["events"]) {
    if (!evs.IsSequence()) malformed("'events' must be a list");
    for (const auto& e : evs) {
      check_keys(e, {"name", "roles"}, "event");
      EventTypeSpec spec;
      spec.name = scalar(e["name"], "event name");
      if (!e["roles"]) malformed("event '" + spec.name + "' is missing 'roles'");
      spec.roles = string_list(e["roles"], "roles");
      schema.events.push_back(std::move(spec));
    }
  }
  if (const auto skip = root["skip_stage1"]) {
    try {
      schema.skip_stage1 = skip.as<bool>();
    } catch (const YAML::Exception&) {
      malformed("'skip_stage1' must be a boolean");
    }
  }
  if (const auto inv = root["inverse_relations"]) {
    if (!inv.IsSequence()) malformed("'inverse_relations' must be a list of pairs");
    for (const auto& pair : inv) {
      auto names = string_list(pair, "inverse_relations entry");
      if (names.size() != 2) malformed("each inverse_relations entry must hold exactly two names");
      schema.inverse_relations.push_back({names[0], names[1]});
    }
  }
  if (const auto al = root["aliases"]) schema.aliases = string_map(al, "aliases");
  if (const auto ra = root["role_aliases"]) schema.role_aliases = string_map(ra, "role_aliases");

  // Presence is a task invariant, not a syntax question.
  const bool has_rel = static_cast<bool>(root["relations"]);
  const bool has_ent = static_cast<bool>(root["entities"]);
  const bool has_ev = static_cast<bool>(root["events"]);
  if ((schema.task == Task::RE) != has_rel || (schema.task == Task::NER) != has_ent ||
      (schema.task == Task::EE) != has_ev) {
    invalid("inventory-matches-task", "a " + std::string(to_string(schema.task)) +
                                          " schema must populate exactly its own inventory");
  }
  return schema;
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::RE: return "RE";
    case Task::NER: return "NER";
    case Task::EE: return "EE";
  }
  return "?";
}

std::string_view to_string(Language language) { return language == Language::EN ? "EN" : "ZH"; }

Task parse_task(std::string_view name) {
  auto n = text::ascii_lower(text::trim(name));
  if (n == "re") return Task::RE;
  if (n == "ner") return Task::NER;
  if (n == "ee") return Task::EE;
  throw Error(ErrorCode::ConfigError, "unknown task '" + std::string(name) + "' (expected re, ner or ee)");
}

Language parse_language(std::string_view name) {
  auto n = text::ascii_lower(text::trim(name));
  if (n == "en") return Language::EN;
  if (n == "zh") return Language::ZH;
  throw Error(ErrorCode::ConfigError, "unknown language '" + std::string(name) + "' (expected en or zh)");
}

std::vector<std::string> TaskSchema::type_names() const {
  std::vector<std::string> out;
  switch (task) {
    case Task::RE:
      for (const auto& r : relations) out.push_back(r.name);
      break;
    case Task::NER:
      if (entities) out = entities->types;
      break;
    case Task::EE:
      for (const auto& e : events) out.push_back(e.name);
      break;
  }
  return out;
}

void validate_schema(const TaskSchema& schema, const TemplateRegistry& templates) {
  const bool re = schema.task == Task::RE, ner = schema.task == Task::NER, ee = schema.task == Task::EE;
  if (re != !schema.relations.empty() || ner != schema.entities.has_value() || ee != !schema.events.empty()) {
    invalid("inventory-matches-task", "a " + std::string(to_string(schema.task)) +
                                          " schema must populate exactly its own (non-empty) inventory");
  }
  if (schema.skip_stage1 && !ner) invalid("skip-stage1-ner-only", "skip_stage1 is only meaningful for NER");
  if (!re && !schema.inverse_relations.empty()) invalid("inverse-relations-re-only", "inverse_relations need an RE schema");
  if (!ee && !schema.role_aliases.empty()) invalid("role-aliases-ee-only", "role_aliases need an EE schema");

  std::vector<std::string> names;
  for (const auto& r : schema.relations) {
    check_identifier(r.name, "relation name");
    check_identifier(r.subject_type, "subject type");
    check_identifier(r.object_type, "object type");
    std::vector<std::string> attrs;
    for (const auto& a : r.object_chain) {
      check_identifier(a.attribute_name, "attribute name");
      attrs.push_back(a.attribute_name);
      if (!templates.find(a.question_template_id)) {
        throw Error(ErrorCode::UnresolvedTemplate, "relation '" + r.name + "' attribute '" + a.attribute_name +
                                                       "' references missing template '" + a.question_template_id + "'");
      }
    }
    check_unique(attrs, "chain-attribute-distinct", "attribute in the chain of '" + r.name + "'");
    names.push_back(r.name);
  }
  check_unique(names, "relation-name-unique", "relation name");

  if (schema.entities) {
    if (schema.entities->types.empty()) invalid("entity-types-nonempty", "entity type list is empty");
    for (const auto& t : schema.entities->types) check_identifier(t, "entity type");
    check_unique(schema.entities->types, "entity-types-unique", "entity type");
  }

  names.clear();
  for (const auto& e : schema.events) {
    check_identifier(e.name, "event type");
    if (e.roles.empty()) invalid("event-roles-nonempty", "event type '" + e.name + "' has no roles");
    for (const auto& r : e.roles) check_identifier(r, "role");
    check_unique(e.roles, "event-roles-unique", "role in event type '" + e.name + "'");
    names.push_back(e.name);
  }
  check_unique(names, "event-name-unique", "event type");

  auto inventory = schema.type_names();
  auto in_inventory = [&](const std::string& n) {
    auto key = text::canonicalize(n);
    for (const auto& i : inventory) {
      if (text::canonicalize(i) == key) return true;
    }
    return false;
  };
  for (const auto& inv : schema.inverse_relations) {
    check_identifier(inv.inverse, "inverse relation");
    if (!in_inventory(inv.canonical)) {
      invalid("inverse-target-in-inventory", "inverse relation target '" + inv.canonical + "' is not a relation");
    }
    if (text::canonicalize(inv.inverse) == text::canonicalize(inv.canonical)) {
      invalid("inverse-distinct", "relation '" + inv.canonical + "' cannot be its own inverse");
    }
  }
  for (const auto& [from, to] : schema.aliases) {
    if (!in_inventory(to)) invalid("alias-target-in-inventory", "alias '" + from + "' maps to unknown name '" + to + "'");
  }
  for (const auto& [from, to] : schema.role_aliases) {
    bool found = false;
    for (const auto& e : schema.events) found = found || find_role(e, to) != nullptr;
    if (!found) invalid("role-alias-target-known", "role alias '" + from + "' maps to unknown role '" + to + "'");
  }
}

TaskSchema parse_schema(std::string_view document, const TemplateRegistry* templates) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(document));
  } catch (const YAML::Exception& e) {
    malformed(std::string("not valid YAML: ") + e.what());
  }
  TaskSchema schema;
  try {
    schema = schema_from_yaml(root);
  } catch (const YAML::Exception& e) {
    malformed(e.what());
  }
  validate_schema(schema, templates ? *templates : TemplateRegistry::builtin());
  return schema;
}

TaskSchema load_schema(const std::filesystem::path& path, const TemplateRegistry* templates) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedSchema, "cannot open schema file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_schema(ss.str(), templates);
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.detail());
  }
}

std::string serialize_schema(const TaskSchema& schema) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  if (!schema.name.empty()) out << YAML::Key << "name" << YAML::Value << schema.name;
  out << YAML::Key << "task" << YAML::Value << std::string(to_string(schema.task));
  out << YAML::Key << "language" << YAML::Value << std::string(to_string(schema.language));
  if (schema.task == Task::RE) {
    out << YAML::Key << "relations" << YAML::Value << YAML::BeginSeq;
    for (const auto& r : schema.relations) {
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << r.name << YAML::Key << "subject_type"
          << YAML::Value << r.subject_type << YAML::Key << "object_type" << YAML::Value << r.object_type;
      if (!r.object_chain.empty()) {
        out << YAML::Key << "object_chain" << YAML::Value << YAML::BeginSeq;
        for (const auto& a : r.object_chain) {
          out << YAML::BeginMap << YAML::Key << "attribute" << YAML::Value << a.attribute_name << YAML::Key
              << "template" << YAML::Value << a.question_template_id << YAML::EndMap;
        }
        out << YAML::EndSeq;
      }
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (schema.entities) {
    out << YAML::Key << "entities" << YAML::Value << YAML::Flow << schema.entities->types;
  }
  if (schema.task == Task::EE) {
    out << YAML::Key << "events" << YAML::Value << YAML::BeginSeq;
    for (const auto& e : schema.events) {
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << e.name << YAML::Key << "roles" << YAML::Value
          << YAML::Flow << e.roles << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (schema.skip_stage1) out << YAML::Key << "skip_stage1" << YAML::Value << true;
  if (!schema.inverse_relations.empty()) {
    out << YAML::Key << "inverse_relations" << YAML::Value << YAML::BeginSeq;
    for (const auto& inv : schema.inverse_relations) {
      out << YAML::Flow << std::vector<std::string>{inv.inverse, inv.canonical};
    }
    out << YAML::EndSeq;
  }
  if (!schema.aliases.empty()) out << YAML::Key << "aliases" << YAML::Value << schema.aliases;
  if (!schema.role_aliases.empty()) out << YAML::Key << "role_aliases" << YAML::Value << schema.role_aliases;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

const RelationType* find_relation(const TaskSchema& schema, std::string_view name) {
  return find_canonical(schema.relations, name, [](const RelationType& r) -> const std::string& { return r.name; });
}

const std::string* find_entity_type(const TaskSchema& schema, std::string_view name) {
  if (!schema.entities) return nullptr;
  return find_canonical(schema.entities->types, name, [](const std::string& s) -> const std::string& { return s; });
}

const EventTypeSpec* find_event_type(const TaskSchema& schema, std::string_view name) {
  return find_canonical(schema.events, name, [](const EventTypeSpec& e) -> const std::string& { return e.name; });
}

const std::string* find_role(const EventTypeSpec& event, std::string_view role) {
  return find_canonical(event.roles, role, [](const std::string& s) -> const std::string& { return s; });
}

const RelationType& lookup_relation(const TaskSchema& schema, std::string_view name) {
  if (schema.task != Task::RE) throw Error(ErrorCode::TaskMismatch, "lookup_relation needs an RE schema");
  if (const auto* r = find_relation(schema, name)) return *r;
  throw Error(ErrorCode::UnknownType, "unknown relation '" + std::string(name) + "'");
}

const std::string& lookup_entity_type(const TaskSchema& schema, std::string_view name) {
  if (const auto* t = find_entity_type(schema, name)) return *t;
  throw Error(ErrorCode::UnknownType, "unknown entity type '" + std::string(name) + "'");
}

const EventTypeSpec& lookup_event_type(const TaskSchema& schema, std::string_view name) {
  if (const auto* e = find_event_type(schema, name)) return *e;
  throw Error(ErrorCode::UnknownType, "unknown event type '" + std::string(name) + "'");
}

const std::string& lookup_role(const EventTypeSpec& event, std::string_view role) {
  if (const auto* r = find_role(event, role)) return *r;
  throw Error(ErrorCode::UnknownType, "unknown role '" + std::string(role) + "' for event type '" + event.name + "'");
}

std::optional<std::string> resolve_label(const TaskSchema& schema, std::string_view label) {
  auto key = text::canonicalize(label);
  for (const auto& n : schema.type_names()) {
    if (text::canonicalize(n) == key) return n;
  }
  if (const auto* to = find_in_map(schema.aliases, label)) {
    for (const auto& n : schema.type_names()) {
      if (text::canonicalize(n) == text::canonicalize(*to)) return n;
    }
  }
  for (const auto& inv : schema.inverse_relations) {
    if (text::canonicalize(inv.inverse) == key) return inv.inverse;
  }
  return std::nullopt;
}

std::optional<std::string> resolve_role(const TaskSchema& schema, const EventTypeSpec& event, std::string_view label) {
  if (const auto* r = find_role(event, label)) return *r;
  if (const auto* to = find_in_map(schema.role_aliases, label)) {
    if (const auto* r = find_role(event, *to)) return *r;
  }
  return std::nullopt;
}

std::string format_type_list(const std::vector<std::string>& names) {
  std::string out = "[";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += "'" + names[i] + "'";
  }
  return out + "]";
}

Triple to_canonical_direction(const Triple& triple, const TaskSchema& schema) {
  auto key = text::canonicalize(triple.relation);
  for (const auto& inv : schema.inverse_relations) {
    if (text::canonicalize(inv.inverse) != key) continue;
    Triple out = triple;
    out.relation = inv.canonical;
    std::swap(out.subject, out.object);
    std::swap(out.subject_type, out.object_type);
    return out;
  }
  return triple;
}

}  // namespace mtie
