#include "json_io.hpp"

namespace mtie::json_io {

json to_json(const Triple& t) {
  json j = {{"subject", t.subject}, {"relation", t.relation}, {"object", t.object}};
  if (!t.attributes.empty()) j["attributes"] = t.attributes;
  if (!t.subject_type.empty()) j["subject_type"] = t.subject_type;
  if (!t.object_type.empty()) j["object_type"] = t.object_type;
  return j;
}

json to_json(const Entity& e) { return {{"name", e.name}, {"type", e.type}}; }

json to_json(const EventRecord& e) {
  json args = json::array();
  for (const auto& a : e.arguments) args.push_back({{"role", a.role}, {"content", a.content}});
  return {{"event_type", e.event_type}, {"arguments", args}};
}

Triple triple_from_json(const json& j) {
  Triple t;
  t.subject = j.at("subject").get<std::string>();
  t.relation = j.at("relation").get<std::string>();
  t.object = j.at("object").get<std::string>();
  if (j.contains("attributes")) t.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
  t.subject_type = j.value("subject_type", std::string());
  t.object_type = j.value("object_type", std::string());
  return t;
}

Entity entity_from_json(const json& j) { return {j.at("name").get<std::string>(), j.at("type").get<std::string>()}; }

EventRecord event_from_json(const json& j) {
  EventRecord e;
  e.event_type = j.at("event_type").get<std::string>();
  for (const auto& a : j.at("arguments")) {
    e.arguments.insert({a.at("role").get<std::string>(), a.at("content").get<std::string>()});
  }
  return e;
}

}  // namespace mtie::json_io
