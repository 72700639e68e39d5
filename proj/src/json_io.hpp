#pragma once

#include <nlohmann/json.hpp>

#include "mtie/types.hpp"

// JSON shapes shared by batch reports, prediction files and the CLI.
namespace mtie::json_io {

using nlohmann::json;

json to_json(const Triple& t);
json to_json(const Entity& e);
json to_json(const EventRecord& e);

// Throw nlohmann::json::exception on shape errors.
Triple triple_from_json(const json& j);
Entity entity_from_json(const json& j);
EventRecord event_from_json(const json& j);

}  // namespace mtie::json_io
