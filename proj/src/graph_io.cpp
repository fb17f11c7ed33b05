#include "netforge/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "netforge/error.hpp"

namespace netforge {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::size_t get_count(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_number_unsigned()) {
    throw FormatError(where + ": '" + key + "' must be a non-negative integer");
  }
  return obj.at(key).get<std::size_t>();
}

NodeParams params_from_json(NodeKind kind, const json& p, const std::string& where) {
  switch (kind) {
    case NodeKind::conv:
      return kernels::ConvParams{get_count(p, "out_channels", where), get_count(p, "kernel", where),
                                 get_count(p, "stride", where), get_count(p, "pad", where)};
    case NodeKind::maxpool:
      return PoolParams{get_count(p, "kernel", where), get_count(p, "stride", where)};
    case NodeKind::fire:
      return FireDims{get_count(p, "s1x1", where), get_count(p, "e1x1", where),
                      get_count(p, "e3x3", where)};
    case NodeKind::inner_product:
      return InnerProductParams{get_count(p, "out", where)};
    case NodeKind::dropout:
      if (!p.contains("rate") || !p.at("rate").is_number()) {
        throw FormatError(where + ": 'rate' must be a number");
      }
      return DropoutParams{p.at("rate").get<double>()};
    default:
      return std::monostate{};
  }
}

}  // namespace

ordered_json params_to_json(const NodeSpec& node) {
  ordered_json p = ordered_json::object();
  switch (node.kind) {
    case NodeKind::conv:
      p["out_channels"] = node.conv().out_channels;
      p["kernel"] = node.conv().kernel;
      p["stride"] = node.conv().stride;
      p["pad"] = node.conv().pad;
      break;
    case NodeKind::maxpool:
      p["kernel"] = node.pool().kernel;
      p["stride"] = node.pool().stride;
      break;
    case NodeKind::fire:
      p["s1x1"] = node.fire().s1x1;
      p["e1x1"] = node.fire().e1x1;
      p["e3x3"] = node.fire().e3x3;
      break;
    case NodeKind::inner_product:
      p["out"] = node.inner_product().out;
      break;
    case NodeKind::dropout:
      p["rate"] = node.dropout().rate;
      break;
    default:
      break;
  }
  return p;
}

ordered_json graph_to_json(const Graph& graph) {
  ordered_json doc;
  doc["version"] = 1;
  doc["name"] = graph.name;
  doc["input"] = {graph.input.c, graph.input.h, graph.input.w};
  doc["classes"] = graph.classes;
  ordered_json nodes = ordered_json::array();
  for (const auto& node : graph.nodes) {
    ordered_json n;
    n["id"] = node.id;
    n["kind"] = std::string(to_string(node.kind));
    n["params"] = params_to_json(node);
    n["inputs"] = node.inputs;
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

Graph graph_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError("architecture document must be an object");
  if (!doc.contains("version") || doc.at("version") != 1) {
    throw FormatError("unsupported architecture version");
  }
  Graph graph;
  try {
    graph.name = doc.at("name").get<std::string>();
    const auto& in = doc.at("input");
    if (!in.is_array() || in.size() != 3) throw FormatError("'input' must be [C,H,W]");
    graph.input = {in[0].get<std::size_t>(), in[1].get<std::size_t>(), in[2].get<std::size_t>()};
    graph.classes = doc.at("classes").get<std::size_t>();
    for (const auto& n : doc.at("nodes")) {
      NodeSpec node;
      node.id = n.at("id").get<std::string>();
      node.kind = parse_node_kind(n.at("kind").get<std::string>());
      const json params = n.contains("params") ? n.at("params") : json::object();
      node.params = params_from_json(node.kind, params, "node '" + node.id + "'");
      node.inputs = n.at("inputs").get<std::vector<std::string>>();
      graph.nodes.push_back(std::move(node));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed architecture document: ") + e.what());
  }
  return graph;
}

std::string dump_graph(const Graph& graph) { return graph_to_json(graph).dump(2) + "\n"; }

namespace {
json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}
}  // namespace

Graph load_graph(const std::filesystem::path& path) { return graph_from_json(parse_file(path)); }

void save_graph(const Graph& graph, const std::filesystem::path& path) {
  write_file_atomic(path, dump_graph(graph));
}

ordered_json plan_to_json(const SqueezePlan& plan) {
  ordered_json doc = ordered_json::object();
  for (const auto& [id, dims] : plan) doc[id] = {dims.s1x1, dims.e1x1, dims.e3x3};
  return doc;
}

SqueezePlan plan_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError("squeeze plan must be an object");
  SqueezePlan plan;
  for (const auto& [id, dims] : doc.items()) {
    if (!dims.is_array() || dims.size() != 3) {
      throw FormatError("plan entry '" + id + "' must be [s1x1, e1x1, e3x3]");
    }
    try {
      plan[id] = FireDims{dims[0].get<std::size_t>(), dims[1].get<std::size_t>(),
                          dims[2].get<std::size_t>()};
    } catch (const json::exception&) {
      throw FormatError("plan entry '" + id + "' must hold non-negative integers");
    }
  }
  return plan;
}

SqueezePlan load_plan(const std::filesystem::path& path) { return plan_from_json(parse_file(path)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw FormatError("short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace netforge
