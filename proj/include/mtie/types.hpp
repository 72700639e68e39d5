#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mtie {

enum class Task { RE, NER, EE };
enum class Language { EN, ZH };

std::string_view to_string(Task task);
std::string_view to_string(Language language);
// Case-insensitive; throws Error(ConfigError) on unknown names.
Task parse_task(std::string_view name);
Language parse_language(std::string_view name);

// (s, r, o) plus optional complex-object attributes and entity types.
struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
  std::map<std::string, std::string> attributes;
  std::string subject_type;
  std::string object_type;

  auto operator<=>(const Triple&) const = default;
};

struct Entity {
  std::string name;
  std::string type;

  auto operator<=>(const Entity&) const = default;
};

struct Argument {
  std::string role;
  std::string content;

  auto operator<=>(const Argument&) const = default;
};

// Arguments are a set: no (role, content) duplicates and a canonical order,
// so two records compare equal regardless of extraction order.
struct EventRecord {
  std::string event_type;
  std::set<Argument> arguments;

  auto operator<=>(const EventRecord&) const = default;
};

using TripleSet = std::set<Triple>;
using EntitySet = std::set<Entity>;
using EventSet = std::set<EventRecord>;

struct GoldAnnotation {
  std::variant<TripleSet, EntitySet, EventSet> elements;

  Task task() const;
  const TripleSet& triples() const { return std::get<TripleSet>(elements); }
  const EntitySet& entities() const { return std::get<EntitySet>(elements); }
  const EventSet& events() const { return std::get<EventSet>(elements); }
};

struct Sample {
  std::string id;
  std::string sentence;
  std::optional<GoldAnnotation> gold;
};

}  // namespace mtie
