#pragma once
// JSON model files. Top-level keys: channels, globals, templates, instances.
// Unknown keys anywhere in the document are rejected.

#include <string>

#include <json.hpp>

#include "stasmc/sta.hpp"

namespace stasmc {

Network network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const Network& n);
Network load_network(const std::string& path);

// "clk <= 10" / "clk < T" -> ClockBound
ClockBound parse_clock_bound(const std::string& text);
ValueKind parse_kind(const std::string& s);

// Throws std::runtime_error naming the offending key.
void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where);

}  // namespace stasmc
