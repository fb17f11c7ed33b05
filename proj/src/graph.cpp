#include "netforge/graph.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <set>

#include "netforge/error.hpp"

namespace netforge {

namespace {

constexpr std::array<std::pair<NodeKind, std::string_view>, 11> kKindNames{{
    {NodeKind::input, "input"},
    {NodeKind::conv, "conv"},
    {NodeKind::relu, "relu"},
    {NodeKind::maxpool, "maxpool"},
    {NodeKind::fire, "fire"},
    {NodeKind::scale, "scale"},
    {NodeKind::add, "add"},
    {NodeKind::global_avg_pool, "global_avg_pool"},
    {NodeKind::inner_product, "inner_product"},
    {NodeKind::dropout, "dropout"},
    {NodeKind::softmax_output, "softmax_output"},
}};

std::size_t expected_arity(NodeKind kind) {
  switch (kind) {
    case NodeKind::input:
      return 0;
    case NodeKind::add:
      return 2;
    default:
      return 1;
  }
}

bool params_match(const NodeSpec& node) {
  switch (node.kind) {
    case NodeKind::conv:
      return std::holds_alternative<kernels::ConvParams>(node.params);
    case NodeKind::maxpool:
      return std::holds_alternative<PoolParams>(node.params);
    case NodeKind::fire:
      return std::holds_alternative<FireDims>(node.params);
    case NodeKind::inner_product:
      return std::holds_alternative<InnerProductParams>(node.params);
    case NodeKind::dropout:
      return std::holds_alternative<DropoutParams>(node.params);
    default:
      return std::holds_alternative<std::monostate>(node.params);
  }
}

// Shape of one node's output given its input shapes; throws on violations.
ActShape node_output_shape(const NodeSpec& node, const std::vector<ActShape>& in,
                           const ActShape& declared_input) {
  switch (node.kind) {
    case NodeKind::input:
      return declared_input;
    case NodeKind::conv: {
      const auto& p = node.conv();
      if (p.kernel % 2 == 0) throw GeometryError("kernel must be odd");
      return {p.out_channels, kernels::conv_output_extent(in[0].h, p.kernel, p.stride, p.pad),
              kernels::conv_output_extent(in[0].w, p.kernel, p.stride, p.pad)};
    }
    case NodeKind::maxpool: {
      const auto& p = node.pool();
      return {in[0].c, kernels::pool_output_extent(in[0].h, p.kernel, p.stride),
              kernels::pool_output_extent(in[0].w, p.kernel, p.stride)};
    }
    case NodeKind::fire: {
      const FireExpansion fire = expand_fire(node.fire(), in[0].c);
      return {fire.out_channels, in[0].h, in[0].w};
    }
    case NodeKind::add:
      if (!(in[0] == in[1])) {
        throw ShapeError("operand shapes differ: " + to_string(in[0]) + " vs " + to_string(in[1]));
      }
      return in[0];
    case NodeKind::global_avg_pool:
      return {in[0].c, 1, 1};
    case NodeKind::inner_product:
      return {node.inner_product().out, 1, 1};
    case NodeKind::softmax_output:
      if (in[0].h != 1 || in[0].w != 1) {
        throw ShapeError("softmax input must be a vector per sample, got " + to_string(in[0]));
      }
      return in[0];
    case NodeKind::relu:
    case NodeKind::scale:
    case NodeKind::dropout:
      return in[0];
  }
  return in[0];
}

void check_params(const NodeSpec& node) {
  if (node.kind == NodeKind::conv) {
    const auto& p = node.conv();
    if (p.out_channels == 0 || p.kernel == 0 || p.stride == 0) {
      throw GeometryError("conv out_channels, kernel and stride must be positive");
    }
  } else if (node.kind == NodeKind::maxpool) {
    if (node.pool().kernel == 0 || node.pool().stride == 0) {
      throw GeometryError("pool kernel and stride must be positive");
    }
  } else if (node.kind == NodeKind::inner_product) {
    if (node.inner_product().out == 0) throw GeometryError("inner_product width must be positive");
  } else if (node.kind == NodeKind::dropout) {
    const double r = node.dropout().rate;
    if (!(r >= 0.0 && r < 1.0)) throw GeometryError("dropout rate must be in [0, 1)");
  }
}

// Kahn's algorithm; returns a partial order when the graph has a cycle.
std::vector<std::size_t> kahn(const Graph& graph) {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) index.emplace(graph.nodes[i].id, i);
  std::vector<std::size_t> pending(graph.nodes.size(), 0);
  std::vector<std::vector<std::size_t>> out_edges(graph.nodes.size());
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    for (const auto& in : graph.nodes[i].inputs) {
      auto it = index.find(in);
      if (it == index.end()) continue;
      ++pending[i];
      out_edges[it->second].push_back(i);
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    order.push_back(i);
    for (std::size_t next : out_edges[i]) {
      if (--pending[next] == 0) ready.push(next);
    }
  }
  return order;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

NodeKind parse_node_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw FormatError("unknown node kind '" + std::string(name) + "'");
}

std::string to_string(const ActShape& shape) {
  return "(" + std::to_string(shape.c) + "," + std::to_string(shape.h) + "," +
         std::to_string(shape.w) + ")";
}

bool has_params(NodeKind kind) {
  return kind == NodeKind::conv || kind == NodeKind::fire || kind == NodeKind::scale ||
         kind == NodeKind::inner_product;
}

const NodeSpec* Graph::find(std::string_view id) const {
  for (const auto& node : nodes) {
    if (node.id == id) return &node;
  }
  return nullptr;
}

NodeSpec* Graph::find(std::string_view id) {
  for (auto& node : nodes) {
    if (node.id == id) return &node;
  }
  return nullptr;
}

std::size_t Graph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return i;
  }
  throw InputError("no node named '" + std::string(id) + "'");
}

std::vector<std::string> Graph::consumers(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto& node : nodes) {
    if (std::find(node.inputs.begin(), node.inputs.end(), id) != node.inputs.end()) {
      out.push_back(node.id);
    }
  }
  return out;
}

std::vector<std::size_t> topological_order(const Graph& graph) {
  for (const auto& node : graph.nodes) {
    for (const auto& in : node.inputs) {
      if (!graph.find(in)) {
        throw PreconditionError("node '" + node.id + "' reads unknown node '" + in + "'");
      }
    }
  }
  auto order = kahn(graph);
  if (order.size() != graph.nodes.size()) {
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
      if (std::find(order.begin(), order.end(), i) == order.end()) {
        throw PreconditionError("cycle through node '" + graph.nodes[i].id + "'");
      }
    }
  }
  return order;
}

std::vector<Diagnostic> validate(const Graph& graph) {
  std::vector<Diagnostic> diags;
  std::set<std::string_view> seen;
  std::size_t inputs = 0, outputs = 0;
  bool structural_ok = true;

  for (const auto& node : graph.nodes) {
    if (node.id.empty() || node.id.find('.') != std::string::npos) {
      diags.push_back({node.id, "node ids must be non-empty and must not contain '.'"});
      structural_ok = false;
    }
    if (!seen.insert(node.id).second) {
      diags.push_back({node.id, "duplicate node id"});
      structural_ok = false;
    }
    if (node.kind == NodeKind::input) ++inputs;
    if (node.kind == NodeKind::softmax_output) ++outputs;
    if (node.inputs.size() != expected_arity(node.kind)) {
      diags.push_back({node.id, std::string(to_string(node.kind)) + " expects " +
                                    std::to_string(expected_arity(node.kind)) + " input(s), has " +
                                    std::to_string(node.inputs.size())});
      structural_ok = false;
    }
    if (!params_match(node)) {
      diags.push_back({node.id, "parameters do not match kind " + std::string(to_string(node.kind))});
      structural_ok = false;
    }
    for (const auto& in : node.inputs) {
      if (!graph.find(in)) {
        diags.push_back({node.id, "unknown input '" + in + "'"});
        structural_ok = false;
      }
    }
  }
  if (inputs != 1) {
    diags.push_back({"", "graph needs exactly one input node, has " + std::to_string(inputs)});
  }
  if (outputs != 1) {
    diags.push_back(
        {"", "graph needs exactly one softmax_output node, has " + std::to_string(outputs)});
  }
  if (graph.classes < 2) diags.push_back({"", "class count must be at least 2"});

  const auto order = kahn(graph);
  if (order.size() != graph.nodes.size()) {
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
      if (std::find(order.begin(), order.end(), i) == order.end()) {
        diags.push_back({graph.nodes[i].id, "node is part of a cycle"});
      }
    }
    structural_ok = false;
  }
  for (const auto& node : graph.nodes) {
    if (node.kind != NodeKind::softmax_output && graph.consumers(node.id).empty()) {
      diags.push_back({node.id, "output is never consumed"});
    }
  }
  if (!structural_ok || inputs != 1) return diags;

  // Shape propagation; a failing node poisons its consumers silently.
  std::map<std::string_view, ActShape> shapes;
  for (std::size_t i : order) {
    const NodeSpec& node = graph.nodes[i];
    std::vector<ActShape> in;
    bool ready = true;
    for (const auto& name : node.inputs) {
      auto it = shapes.find(name);
      if (it == shapes.end()) {
        ready = false;
        break;
      }
      in.push_back(it->second);
    }
    if (!ready) continue;
    try {
      check_params(node);
      const ActShape out = node_output_shape(node, in, graph.input);
      if (out.c == 0 || out.h == 0 || out.w == 0) throw GeometryError("empty activation");
      if (node.kind == NodeKind::softmax_output && out.c != graph.classes) {
        throw ShapeError("produces " + std::to_string(out.c) + " scores for " +
                         std::to_string(graph.classes) + " classes");
      }
      shapes.emplace(node.id, out);
    } catch (const Error& e) {
      diags.push_back({node.id, e.what()});
    }
  }
  return diags;
}

std::map<std::string, ActShape> infer_shapes(const Graph& graph, const ActShape& input) {
  std::map<std::string, ActShape> shapes;
  for (std::size_t i : topological_order(graph)) {
    const NodeSpec& node = graph.nodes[i];
    if (node.inputs.size() != expected_arity(node.kind)) {
      throw PreconditionError("node '" + node.id + "' has wrong input count");
    }
    std::vector<ActShape> in;
    for (const auto& name : node.inputs) in.push_back(shapes.at(name));
    try {
      check_params(node);
      const ActShape out = node_output_shape(node, in, input);
      if (out.c == 0 || out.h == 0 || out.w == 0) throw GeometryError("empty activation");
      shapes.emplace(node.id, out);
    } catch (const GeometryError& e) {
      throw GeometryError("node '" + node.id + "': " + e.what());
    } catch (const ShapeError& e) {
      throw ShapeError("node '" + node.id + "': " + e.what());
    } catch (const ConstructionError& e) {
      throw ConstructionError("node '" + node.id + "': " + e.what());
    }
  }
  return shapes;
}

void require_valid(const Graph& graph) {
  const auto diags = validate(graph);
  if (diags.empty()) return;
  std::string message = "graph '" + graph.name + "' is invalid:";
  for (const auto& d : diags) message += "\n  " + (d.node.empty() ? "<graph>" : d.node) + ": " + d.reason;
  throw PreconditionError(message);
}

}  // namespace netforge
