#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "netforge/graph.hpp"
#include "netforge/graph_io.hpp"

namespace netforge {

// Fire dimensions of the twelve modules of Residual-Squeeze-VGG16, in order.
const std::array<FireDims, 12>& res_squ_vgg16_fire_table();

// Shape of a squeezed VGG-style network: a stem convolution (with Scale and
// ReLU), then blocks of Fire modules each closed by a max pool, then a 1x1
// output convolution, global average pooling and softmax. Block 0 precedes
// the first pool; every later block that holds at least two Fire modules
// receives a pool-to-block shortcut.
struct SqueezeVggLayout {
  std::string name;
  ActShape input;
  kernels::ConvParams stem;
  PoolParams pool;
  std::vector<std::vector<FireDims>> blocks;
};

SqueezeVggLayout res_squ_vgg16_layout();
// 3x32x32 input, four Fire modules, two shortcuts. Desk-scale training target.
SqueezeVggLayout mini_res_squ_layout();
// 3x16x16 input, two Fire modules, one projected shortcut. Gradient checks.
SqueezeVggLayout gradcheck_layout();

Graph build_vgg16(std::size_t classes);
Graph build_res_squ_vgg16(std::size_t classes);
Graph build_residual_squeeze(const SqueezeVggLayout& layout, std::size_t classes);

// The same layout with every Fire module written as a 3x3 convolution of equal
// width followed by a ReLU, and no shortcuts. Convs are numbered conv1 (stem),
// conv2, conv3, ... in order.
Graph build_conv_skeleton(const SqueezeVggLayout& layout, std::size_t classes);

// Maps the skeleton's conv ids to the layout's Fire dimensions.
SqueezePlan squeeze_plan(const SqueezeVggLayout& layout);

// Replaces each planned 3x3 conv (and the ReLU that follows it) with a Fire
// module followed by a Scale layer. Throws PlanError when a planned node is
// missing, is not a 3x3 conv, or its width differs from e1x1 + e3x3.
Graph squeeze_transform(const Graph& graph, const SqueezePlan& plan);

struct ShortcutPlan {
  std::string source;  // pool whose output feeds the shortcut
  std::string target;  // last conv/fire of the bypassed run
  std::string join;    // node whose output is summed with the shortcut
  std::optional<std::size_t> projection_channels;

  bool operator==(const ShortcutPlan&) const = default;
};

struct ResidualizeResult {
  Graph graph;
  std::vector<ShortcutPlan> plans;
};

// Adds a shortcut around every maximal run of two or more conv/fire nodes that
// sits between two pools (or between a pool and the classifier head). When the
// channel counts differ, a 1x1 stride-1 projection conv is inserted on the
// shortcut. Each shortcut ends in an add node followed by a ReLU.
// Throws PreconditionError if the graph is invalid or already has add nodes.
ResidualizeResult residualize(const Graph& graph);

// True when the graphs match up to node naming: same metadata and a
// one-to-one correspondence of nodes preserving kind, parameters and inputs
// (add operands compared as an unordered pair).
bool structurally_equal(const Graph& a, const Graph& b);

}  // namespace netforge
