#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtie/types.hpp"

namespace mtie {

class TemplateRegistry;

struct AttributeSpec {
  std::string attribute_name;
  std::string question_template_id;

  bool operator==(const AttributeSpec&) const = default;
};

struct RelationType {
  std::string name;
  std::string subject_type;
  std::string object_type;
  // Non-empty iff the relation has a complex-object value.
  std::vector<AttributeSpec> object_chain;

  bool has_complex_object() const { return !object_chain.empty(); }
  bool operator==(const RelationType&) const = default;
};

struct EntityTypeInventory {
  std::vector<std::string> types;

  bool operator==(const EntityTypeInventory&) const = default;
};

struct EventTypeSpec {
  std::string name;
  std::vector<std::string> roles;

  bool operator==(const EventTypeSpec&) const = default;
};

// `inverse` (a, r_inv, b) is equivalent to (b, canonical, a).
struct InverseRelation {
  std::string inverse;
  std::string canonical;

  bool operator==(const InverseRelation&) const = default;
};

// The closed type inventory for one task/dataset. Immutable once loaded.
struct TaskSchema {
  std::string name;
  Task task = Task::RE;
  Language language = Language::EN;
  std::vector<RelationType> relations;        // RE only
  std::optional<EntityTypeInventory> entities;  // NER only
  std::vector<EventTypeSpec> events;          // EE only
  bool skip_stage1 = false;                   // NER only
  std::vector<InverseRelation> inverse_relations;
  // Dataset label -> inventory name (types, relations, event types).
  std::map<std::string, std::string> aliases;
  // Dataset role label -> role name (EE only).
  std::map<std::string, std::string> role_aliases;

  // Names of the task's element types in inventory order.
  std::vector<std::string> type_names() const;

  bool operator==(const TaskSchema&) const = default;
};

// Throws MalformedSchema, InvalidSchema or UnresolvedTemplate. Attribute
// templates are resolved against `templates` (the builtin registry when null).
TaskSchema load_schema(const std::filesystem::path& path, const TemplateRegistry* templates = nullptr);
TaskSchema parse_schema(std::string_view document, const TemplateRegistry* templates = nullptr);
std::string serialize_schema(const TaskSchema& schema);

// Checks every invariant; throws InvalidSchema naming the violated rule.
void validate_schema(const TaskSchema& schema, const TemplateRegistry& templates);

// Lookups compare canonicalized names; all throw UnknownType on a miss.
const RelationType& lookup_relation(const TaskSchema& schema, std::string_view name);
const std::string& lookup_entity_type(const TaskSchema& schema, std::string_view name);
const EventTypeSpec& lookup_event_type(const TaskSchema& schema, std::string_view name);
const std::string& lookup_role(const EventTypeSpec& event, std::string_view role);

// Non-throwing variants returning nullptr on a miss.
const RelationType* find_relation(const TaskSchema& schema, std::string_view name);
const std::string* find_entity_type(const TaskSchema& schema, std::string_view name);
const EventTypeSpec* find_event_type(const TaskSchema& schema, std::string_view name);
const std::string* find_role(const EventTypeSpec& event, std::string_view role);

// Maps a dataset label to an inventory name: direct match first, then the
// alias table, then (RE) declared inverse names, which are returned as-is.
// Returns nullopt for unknown labels.
std::optional<std::string> resolve_label(const TaskSchema& schema, std::string_view label);
std::optional<std::string> resolve_role(const TaskSchema& schema, const EventTypeSpec& event,
                                        std::string_view label);

// Rewrites a triple stated with a declared inverse relation into its
// canonical direction: (a, inverse, b) becomes (b, canonical, a), entity
// types swapped. Other triples are returned unchanged.
Triple to_canonical_direction(const Triple& triple, const TaskSchema& schema);

// Serialized inventory as it appears in prompts: ['a', 'b', 'c'].
std::string format_type_list(const std::vector<std::string>& names);

}  // namespace mtie
