#include "netforge/params.hpp"

#include <cmath>
#include <random>

#include "netforge/error.hpp"

namespace netforge {

template <typename T>
const Tensor<T>* ParamSet<T>::find(const std::string& node, const std::string& name) const {
  auto it = nodes.find(node);
  if (it == nodes.end()) return nullptr;
  auto jt = it->second.find(name);
  return jt == it->second.end() ? nullptr : &jt->second;
}

template <typename T>
std::size_t ParamSet<T>::element_count() const {
  std::size_t total = 0;
  for (const auto& [node, named] : nodes) {
    for (const auto& [name, t] : named) total += t.size();
  }
  return total;
}

template <typename T>
ParamSet<T> ParamSet<T>::zeros_like() const {
  ParamSet<T> out;
  for (const auto& [node, named] : nodes) {
    for (const auto& [name, t] : named) out.nodes[node][name] = Tensor<T>(t.shape());
  }
  return out;
}

template struct ParamSet<float>;
template struct ParamSet<double>;

namespace {

void add_conv_slots(std::vector<WeightSlot>& slots, const std::string& node,
                    const std::string& prefix, std::size_t in_channels,
                    const kernels::ConvParams& conv) {
  const std::size_t area = conv.kernel * conv.kernel;
  slots.push_back({node, prefix + "weight", {conv.out_channels, in_channels, conv.kernel, conv.kernel},
                   WeightRole::weight, in_channels * area, conv.out_channels * area});
  slots.push_back({node, prefix + "bias", {conv.out_channels}, WeightRole::bias, 0, 0});
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<WeightSlot> weight_slots(const Graph& graph) {
  const auto shapes = infer_shapes(graph, graph.input);
  std::vector<WeightSlot> slots;
  for (const auto& node : graph.nodes) {
    if (!has_params(node.kind)) continue;
    const ActShape in = shapes.at(node.inputs.at(0));
    switch (node.kind) {
      case NodeKind::conv:
        add_conv_slots(slots, node.id, "", in.c, node.conv());
        break;
      case NodeKind::fire:
        for (const auto& stage : expand_fire(node.fire(), in.c).stages) {
          add_conv_slots(slots, node.id, stage.name + ".", stage.in_channels, stage.conv);
        }
        break;
      case NodeKind::scale:
        slots.push_back({node.id, "gamma", {in.c}, WeightRole::gamma, 0, 0});
        slots.push_back({node.id, "beta", {in.c}, WeightRole::beta, 0, 0});
        break;
      case NodeKind::inner_product: {
        const std::size_t d = in.elements(), m = node.inner_product().out;
        slots.push_back({node.id, "weight", {d, m}, WeightRole::weight, d, m});
        slots.push_back({node.id, "bias", {m}, WeightRole::bias, 0, 0});
        break;
      }
      default:
        break;
    }
  }
  return slots;
}

ParamSet<float> init_weights(const Graph& graph, const InitScheme& fallback,
                             const std::map<std::string, InitScheme>& overrides) {
  for (const auto& [node, scheme] : overrides) {
    if (!graph.find(node)) throw InputError("init override for unknown node '" + node + "'");
  }
  ParamSet<float> params;
  for (const auto& slot : weight_slots(graph)) {
    Tensor<float> t(slot.shape);
    if (slot.role == WeightRole::gamma) {
      t.fill(1.0f);
    } else if (slot.role == WeightRole::weight) {
      auto it = overrides.find(slot.node);
      const InitScheme& scheme = it == overrides.end() ? fallback : it->second;
      const std::uint64_t tag = fnv1a(slot.flat_name());
      std::seed_seq seq{static_cast<std::uint32_t>(scheme.seed),
                        static_cast<std::uint32_t>(scheme.seed >> 32),
                        static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
      std::mt19937_64 rng(seq);
      if (scheme.kind == InitScheme::Kind::gaussian) {
        if (!(scheme.sigma > 0.0)) throw InputError("gaussian init needs sigma > 0");
        std::normal_distribution<double> dist(0.0, scheme.sigma);
        for (auto& v : t.data()) v = static_cast<float>(dist(rng));
      } else {
        const double bound = std::sqrt(6.0 / static_cast<double>(slot.fan_in + slot.fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : t.data()) v = static_cast<float>(dist(rng));
      }
    }
    params.nodes[slot.node][slot.name] = std::move(t);
  }
  return params;
}

template <typename T>
std::optional<std::string> find_param_mismatch(const Graph& graph, const ParamSet<T>& params) {
  for (const auto& slot : weight_slots(graph)) {
    const Tensor<T>* t = params.find(slot.node, slot.name);
    if (!t) return "node '" + slot.node + "': missing tensor '" + slot.name + "'";
    if (t->shape() != slot.shape) {
      return "node '" + slot.node + "': tensor '" + slot.name + "' has shape " +
             to_string(t->shape()) + ", graph expects " + to_string(slot.shape);
    }
  }
  return std::nullopt;
}

template std::optional<std::string> find_param_mismatch(const Graph&, const ParamSet<float>&);
template std::optional<std::string> find_param_mismatch(const Graph&, const ParamSet<double>&);

}  // namespace netforge
