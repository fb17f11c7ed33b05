#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "netforge/graph.hpp"

namespace netforge {

// Architecture description document:
//   {"version":1, "name":..., "input":[C,H,W], "classes":K,
//    "nodes":[{"id":..., "kind":..., "params":{...}, "inputs":[...]}, ...]}
nlohmann::ordered_json graph_to_json(const Graph& graph);
Graph graph_from_json(const nlohmann::json& doc);  // throws FormatError

std::string dump_graph(const Graph& graph);
Graph load_graph(const std::filesystem::path& path);
void save_graph(const Graph& graph, const std::filesystem::path& path);

// Squeeze plan document: {"conv2": [s1x1, e1x1, e3x3], ...}
using SqueezePlan = std::map<std::string, FireDims>;
nlohmann::ordered_json plan_to_json(const SqueezePlan& plan);
SqueezePlan plan_from_json(const nlohmann::json& doc);
SqueezePlan load_plan(const std::filesystem::path& path);

// Serialized parameter record of a node (empty object for parameterless kinds).
nlohmann::ordered_json params_to_json(const NodeSpec& node);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace netforge
