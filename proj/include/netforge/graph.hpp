#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "netforge/fire.hpp"
#include "netforge/kernels.hpp"

namespace netforge {

enum class NodeKind {
  input,
  conv,
  relu,
  maxpool,
  fire,
  scale,
  add,
  global_avg_pool,
  inner_product,
  dropout,
  softmax_output,
};

std::string_view to_string(NodeKind kind);
// Throws FormatError for unknown names.
NodeKind parse_node_kind(std::string_view name);

struct PoolParams {
  std::size_t kernel = 2;
  std::size_t stride = 2;
  bool operator==(const PoolParams&) const = default;
};

struct InnerProductParams {
  std::size_t out = 1;
  bool operator==(const InnerProductParams&) const = default;
};

struct DropoutParams {
  double rate = 0.5;
  bool operator==(const DropoutParams&) const = default;
};

using NodeParams = std::variant<std::monostate, kernels::ConvParams, PoolParams, FireDims,
                                InnerProductParams, DropoutParams>;

struct NodeSpec {
  std::string id;
  NodeKind kind = NodeKind::input;
  NodeParams params;
  std::vector<std::string> inputs;

  const kernels::ConvParams& conv() const { return std::get<kernels::ConvParams>(params); }
  const PoolParams& pool() const { return std::get<PoolParams>(params); }
  const FireDims& fire() const { return std::get<FireDims>(params); }
  const InnerProductParams& inner_product() const { return std::get<InnerProductParams>(params); }
  const DropoutParams& dropout() const { return std::get<DropoutParams>(params); }

  bool operator==(const NodeSpec&) const = default;
};

// Activation extent of one sample, (C,H,W). Rank-2 activations are (C,1,1).
struct ActShape {
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t elements() const { return c * h * w; }
  bool operator==(const ActShape&) const = default;
};

std::string to_string(const ActShape& shape);

// Network topology. Weights live separately in a ParamSet (params.hpp) so the
// same topology can be instantiated at 32- and 64-bit precision.
struct Graph {
  std::string name;
  ActShape input;
  std::size_t classes = 0;
  std::vector<NodeSpec> nodes;

  const NodeSpec* find(std::string_view id) const;
  NodeSpec* find(std::string_view id);
  std::size_t index_of(std::string_view id) const;  // throws InputError when absent
  std::vector<std::string> consumers(std::string_view id) const;

  bool operator==(const Graph&) const = default;
};

struct Diagnostic {
  std::string node;
  std::string reason;
};

// Empty iff the graph is well formed: unique ids, correct arities, resolvable
// inputs, acyclic, one input and one softmax_output node, and every node's
// inferred input shape satisfies its kind's preconditions.
std::vector<Diagnostic> validate(const Graph& graph);

// Node indices in execution order. Ties are resolved by declaration order.
// Throws PreconditionError on cycles or dangling inputs.
std::vector<std::size_t> topological_order(const Graph& graph);

// Per-node activation shapes. Throws GeometryError (naming the node) when a
// spatial extent becomes non-positive and ShapeError on channel mismatches.
std::map<std::string, ActShape> infer_shapes(const Graph& graph, const ActShape& input);

// Throws PreconditionError listing every diagnostic when validation fails.
void require_valid(const Graph& graph);

// Kinds that carry learned parameters.
bool has_params(NodeKind kind);

}  // namespace netforge
