#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netforge/graph.hpp"
#include "netforge/tensor.hpp"

namespace netforge {

// Learned tensors keyed by node id, then by weight name within the node.
template <typename T>
struct ParamSet {
  std::map<std::string, std::map<std::string, Tensor<T>>> nodes;
  // Bumped by every in-place update; forward caches remember the value they saw.
  std::uint64_t generation = 0;

  Tensor<T>& at(const std::string& node, const std::string& name) {
    return nodes.at(node).at(name);
  }
  const Tensor<T>& at(const std::string& node, const std::string& name) const {
    return nodes.at(node).at(name);
  }
  const Tensor<T>* find(const std::string& node, const std::string& name) const;

  std::size_t element_count() const;

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& [node, named] : nodes) {
      for (const auto& [name, t] : named) out.nodes[node][name] = t.template cast<U>();
    }
    return out;
  }

  // Same tensors with every element zero.
  ParamSet zeros_like() const;

  bool operator==(const ParamSet& other) const { return nodes == other.nodes; }
};

enum class WeightRole { weight, bias, gamma, beta };

// One learned tensor the graph requires.
struct WeightSlot {
  std::string node;
  std::string name;  // e.g. "weight", "bias", "squeeze.weight", "gamma"
  Shape shape;
  WeightRole role;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;

  std::string flat_name() const { return node + "." + name; }
};

// Slots in node-declaration order. Requires a graph whose shapes infer.
std::vector<WeightSlot> weight_slots(const Graph& graph);

struct InitScheme {
  enum class Kind { xavier_uniform, gaussian };
  Kind kind = Kind::xavier_uniform;
  double sigma = 0.01;  // gaussian only
  std::uint64_t seed = 0;
};

// Weights drawn per scheme (xavier_uniform: U(+-sqrt(6/(fan_in+fan_out))),
// gaussian: N(0, sigma^2)); biases 0, scale gammas 1 and betas 0. Each slot
// has its own stream derived from the seed and the slot name.
ParamSet<float> init_weights(const Graph& graph, const InitScheme& fallback,
                             const std::map<std::string, InitScheme>& overrides = {});

// Describes the first slot that is missing or mis-shaped, naming its node.
template <typename T>
std::optional<std::string> find_param_mismatch(const Graph& graph, const ParamSet<T>& params);

extern template struct ParamSet<float>;
extern template struct ParamSet<double>;

}  // namespace netforge
