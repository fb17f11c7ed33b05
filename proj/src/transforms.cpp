#include <algorithm>
#include <map>

#include "netforge/architectures.hpp"
#include "netforge/error.hpp"

namespace netforge {

namespace {

void rename_references(Graph& graph, const std::string& from, const std::string& to) {
  for (auto& node : graph.nodes) {
    std::replace(node.inputs.begin(), node.inputs.end(), from, to);
  }
}

std::string unique_id(const Graph& graph, const std::string& wanted) {
  std::string id = wanted;
  for (int suffix = 2; graph.find(id); ++suffix) id = wanted + "_" + std::to_string(suffix);
  return id;
}

bool terminates_run(NodeKind kind) {
  return kind == NodeKind::maxpool || kind == NodeKind::global_avg_pool ||
         kind == NodeKind::inner_product || kind == NodeKind::dropout ||
         kind == NodeKind::softmax_output;
}

}  // namespace

Graph squeeze_transform(const Graph& graph, const SqueezePlan& plan) {
  Graph out = graph;
  for (const auto& [id, dims] : plan) {
    NodeSpec* node = out.find(id);
    if (!node) throw PlanError("plan names unknown node '" + id + "'");
    if (node->kind != NodeKind::conv || node->conv().kernel != 3) {
      throw PlanError("plan node '" + id + "' is not a 3x3 convolution");
    }
    if (dims.out_channels() != node->conv().out_channels) {
      throw PlanError("plan for '" + id + "': e1x1 + e3x3 = " + std::to_string(dims.out_channels()) +
                      " but the conv has " + std::to_string(node->conv().out_channels) +
                      " output channels");
    }
    try {
      check_fire_dims(dims);
    } catch (const ConstructionError& e) {
      throw PlanError("plan for '" + id + "': " + e.what());
    }
    node->kind = NodeKind::fire;
    node->params = dims;

    const std::string scale_id = unique_id(out, id + "_scale");
    const auto consumers = out.consumers(id);
    NodeSpec* follower = consumers.size() == 1 ? out.find(consumers.front()) : nullptr;
    if (follower && follower->kind == NodeKind::relu) {
      // The fire module applies its own ReLUs; the conv's ReLU becomes the Scale.
      const std::string old_id = follower->id;
      follower->kind = NodeKind::scale;
      follower->id = scale_id;
      rename_references(out, old_id, scale_id);
    } else {
      rename_references(out, id, scale_id);
      const auto pos = out.nodes.begin() + static_cast<std::ptrdiff_t>(out.index_of(id)) + 1;
      out.nodes.insert(pos, NodeSpec{scale_id, NodeKind::scale, std::monostate{}, {id}});
    }
  }
  return out;
}

ResidualizeResult residualize(const Graph& graph) {
  require_valid(graph);
  for (const auto& node : graph.nodes) {
    if (node.kind == NodeKind::add) {
      throw PreconditionError("graph already has shortcut node '" + node.id +
                              "'; residualize applies only to plain chains");
    }
  }
  const auto shapes = infer_shapes(graph, graph.input);

  struct Candidate {
    ShortcutPlan plan;
    std::string terminator;
  };
  std::vector<Candidate> candidates;
  std::string last_pool;
  std::vector<std::string> run;
  for (std::size_t i : topological_order(graph)) {
    const NodeSpec& node = graph.nodes[i];
    if (node.kind == NodeKind::conv || node.kind == NodeKind::fire) {
      run.push_back(node.id);
      continue;
    }
    if (!terminates_run(node.kind)) continue;
    if (!last_pool.empty() && run.size() >= 2) {
      const std::string& join = node.inputs.front();
      const ActShape from = shapes.at(last_pool);
      const ActShape to = shapes.at(join);
      // Runs that change spatial extent cannot be bypassed by a 1x1 stride-1 projection.
      if (from.h == to.h && from.w == to.w) {
        ShortcutPlan plan{last_pool, run.back(), join, std::nullopt};
        if (from.c != to.c) plan.projection_channels = to.c;
        candidates.push_back({plan, node.id});
      }
    }
    run.clear();
    last_pool = node.kind == NodeKind::maxpool ? node.id : std::string{};
  }

  ResidualizeResult result{graph, {}};
  Graph& out = result.graph;
  std::size_t counter = 0;
  for (const auto& cand : candidates) {
    const ShortcutPlan& plan = cand.plan;
    std::string shortcut = plan.source;
    std::vector<NodeSpec> inserted;
    if (plan.projection_channels) {
      shortcut = unique_id(out, plan.source + "_proj");
      inserted.push_back({shortcut, NodeKind::conv,
                          kernels::ConvParams{*plan.projection_channels, 1, 1, 0}, {plan.source}});
    }
    std::string add_id, relu_id;
    do {
      ++counter;
      add_id = "res" + std::to_string(counter);
      relu_id = add_id + "_relu";
    } while (out.find(add_id) || out.find(relu_id));
    inserted.push_back({add_id, NodeKind::add, std::monostate{}, {plan.join, shortcut}});
    inserted.push_back({relu_id, NodeKind::relu, std::monostate{}, {add_id}});

    NodeSpec* terminator = out.find(cand.terminator);
    std::replace(terminator->inputs.begin(), terminator->inputs.end(), plan.join, relu_id);
    const auto pos = out.nodes.begin() + static_cast<std::ptrdiff_t>(out.index_of(plan.join)) + 1;
    out.nodes.insert(pos, inserted.begin(), inserted.end());
    result.plans.push_back(plan);
  }
  return result;
}

bool structurally_equal(const Graph& a, const Graph& b) {
  if (!(a.input == b.input) || a.classes != b.classes || a.nodes.size() != b.nodes.size()) {
    return false;
  }
  // Shared table so equal signatures get equal class ids across both graphs.
  std::map<std::string, std::size_t> classes;
  auto classify = [&](const Graph& g) {
    std::vector<std::size_t> ids(g.nodes.size());
    std::map<std::string, std::size_t> by_name;
    for (std::size_t i : topological_order(g)) {
      const NodeSpec& node = g.nodes[i];
      std::vector<std::size_t> inputs;
      for (const auto& in : node.inputs) inputs.push_back(by_name.at(in));
      if (node.kind == NodeKind::add) std::sort(inputs.begin(), inputs.end());
      std::string sig = std::string(to_string(node.kind)) + params_to_json(node).dump() + "<";
      for (std::size_t in : inputs) sig += std::to_string(in) + ",";
      const std::size_t id = classes.emplace(sig, classes.size()).first->second;
      by_name[node.id] = id;
      ids[i] = id;
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  return classify(a) == classify(b);
}

}  // namespace netforge
