#include "netforge/executor.hpp"

#include "netforge/error.hpp"
#include "netforge/graph_io.hpp"
#include "netforge/kernels.hpp"

namespace netforge {

namespace k = kernels;

namespace {

template <typename T>
Tensor<T> as_nchw(const Tensor<T>& t) {
  if (t.rank() == 4) return t;
  return t.reshaped({t.dim(0), t.size() / t.dim(0), 1, 1});
}

template <typename T>
void accumulate(Tensor<T>& into, const Tensor<T>& grad) {
  if (into.empty()) {
    into = grad;
    return;
  }
  require_same_shape(into, grad, "gradient accumulation");
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += grad[i];
}

template <typename T>
struct FireWeights {
  const Tensor<T>& squeeze_w;
  const Tensor<T>& squeeze_b;
  const Tensor<T>& e1_w;
  const Tensor<T>& e1_b;
  const Tensor<T>& e3_w;
  const Tensor<T>& e3_b;
};

template <typename T>
FireWeights<T> fire_weights(const ParamSet<T>& params, const std::string& id) {
  return {params.at(id, "squeeze.weight"),   params.at(id, "squeeze.bias"),
          params.at(id, "expand1x1.weight"), params.at(id, "expand1x1.bias"),
          params.at(id, "expand3x3.weight"), params.at(id, "expand3x3.bias")};
}

}  // namespace

std::uint64_t graph_fingerprint(const Graph& graph) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump_graph(graph)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
ForwardResult<T> forward(const Graph& graph, const ParamSet<T>& params, const Tensor<T>& batch,
                         Mode mode, std::mt19937_64* rng) {
  if (auto mismatch = find_param_mismatch(graph, params)) {
    throw StateError("weights not initialized for this graph: " + *mismatch);
  }
  const Shape expected{batch.rank() == 4 ? batch.dim(0) : 0, graph.input.c, graph.input.h,
                       graph.input.w};
  if (batch.shape() != expected) {
    throw ShapeError("batch " + to_string(batch.shape()) + " does not match declared input " +
                     to_string(graph.input));
  }

  ForwardResult<T> result;
  ForwardCache<T>& cache = result.cache;
  cache.order = topological_order(graph);
  cache.outputs.resize(graph.nodes.size());
  cache.generation = params.generation;
  cache.fingerprint = graph_fingerprint(graph);
  cache.mode = mode;

  auto in = [&](const NodeSpec& node, std::size_t slot) -> const Tensor<T>& {
    return cache.outputs[graph.index_of(node.inputs[slot])];
  };

  for (std::size_t i : cache.order) {
    const NodeSpec& node = graph.nodes[i];
    Tensor<T>& out = cache.outputs[i];
    try {
      switch (node.kind) {
        case NodeKind::input:
          out = batch;
          break;
        case NodeKind::conv:
          out = k::conv2d_forward(in(node, 0), params.at(node.id, "weight"),
                                  params.at(node.id, "bias"), node.conv());
          break;
        case NodeKind::relu:
          out = k::relu(in(node, 0));
          break;
        case NodeKind::maxpool: {
          auto pooled = k::maxpool_forward(in(node, 0), node.pool().kernel, node.pool().stride);
          out = std::move(pooled.output);
          cache.argmax[i] = std::move(pooled.argmax);
          break;
        }
        case NodeKind::fire: {
          const Tensor<T>& x = in(node, 0);
          const FireExpansion fire = expand_fire(node.fire(), x.dim(1));
          const FireWeights<T> w = fire_weights(params, node.id);
          typename ForwardCache<T>::FireState state;
          state.squeezed = k::relu(k::conv2d_forward(x, w.squeeze_w, w.squeeze_b, fire.squeeze().conv));
          state.expanded1x1 =
              k::relu(k::conv2d_forward(state.squeezed, w.e1_w, w.e1_b, fire.expand1x1().conv));
          state.expanded3x3 =
              k::relu(k::conv2d_forward(state.squeezed, w.e3_w, w.e3_b, fire.expand3x3().conv));
          out = k::concat_channels(state.expanded1x1, state.expanded3x3);
          cache.fire[i] = std::move(state);
          break;
        }
        case NodeKind::scale:
          out = k::scale_forward(in(node, 0), params.at(node.id, "gamma"),
                                 params.at(node.id, "beta"));
          break;
        case NodeKind::add:
          out = k::eltwise_add(in(node, 0), in(node, 1));
          break;
        case NodeKind::global_avg_pool:
          out = as_nchw(k::global_avg_pool(in(node, 0)));
          break;
        case NodeKind::inner_product:
          out = as_nchw(k::inner_product(in(node, 0), params.at(node.id, "weight"),
                                         params.at(node.id, "bias")));
          break;
        case NodeKind::dropout: {
          const double rate = node.dropout().rate;
          if (mode == Mode::eval || rate == 0.0) {
            out = in(node, 0);
            break;
          }
          if (!rng) throw StateError("train-mode dropout needs a random generator");
          Tensor<T> mask(in(node, 0).shape());
          std::bernoulli_distribution keep(1.0 - rate);
          const T kept = static_cast<T>(1.0 / (1.0 - rate));
          for (auto& m : mask.data()) m = keep(*rng) ? kept : T{0};
          out = k::multiply(in(node, 0), mask);
          cache.dropout_masks[i] = std::move(mask);
          break;
        }
        case NodeKind::softmax_output:
          out = in(node, 0);
          result.logits = out.reshaped({out.dim(0), out.size() / out.dim(0)});
          break;
      }
    } catch (const GeometryError& e) {
      throw GeometryError("node '" + node.id + "': " + e.what());
    } catch (const ShapeError& e) {
      throw ShapeError("node '" + node.id + "': " + e.what());
    }
  }
  return result;
}

template <typename T>
ParamSet<T> backward(const Graph& graph, const ParamSet<T>& params, const ForwardCache<T>& cache,
                     const Tensor<T>& loss_grad, const BackwardOptions& options) {
  if (cache.outputs.size() != graph.nodes.size() || cache.fingerprint != graph_fingerprint(graph)) {
    throw StateError("activation cache was produced by a different graph");
  }
  if (cache.generation != params.generation) {
    throw StateError("activation cache is stale: weights changed since the forward pass");
  }

  ParamSet<T> grads = params.zeros_like();
  std::vector<Tensor<T>> node_grads(graph.nodes.size());
  auto route = [&](const NodeSpec& node, std::size_t slot, const Tensor<T>& g) {
    accumulate(node_grads[graph.index_of(node.inputs[slot])], g);
  };
  auto input_of = [&](const NodeSpec& node, std::size_t slot) -> const Tensor<T>& {
    return cache.outputs[graph.index_of(node.inputs[slot])];
  };

  for (auto it = cache.order.rbegin(); it != cache.order.rend(); ++it) {
    const std::size_t i = *it;
    const NodeSpec& node = graph.nodes[i];
    if (node.kind == NodeKind::softmax_output) {
      const Tensor<T>& x = input_of(node, 0);
      if (loss_grad.size() != x.size() || loss_grad.rank() != 2 || loss_grad.dim(0) != x.dim(0)) {
        throw ShapeError("loss gradient " + to_string(loss_grad.shape()) +
                         " does not match logits of " + to_string(x.shape()));
      }
      route(node, 0, loss_grad.reshaped(x.shape()));
      continue;
    }
    const Tensor<T>& g = node_grads[i];
    if (g.empty()) continue;

    switch (node.kind) {
      case NodeKind::input:
      case NodeKind::softmax_output:
        break;
      case NodeKind::conv: {
        auto cg = k::conv2d_backward(input_of(node, 0), params.at(node.id, "weight"), node.conv(), g);
        grads.at(node.id, "weight") = std::move(cg.weights);
        grads.at(node.id, "bias") = std::move(cg.bias);
        route(node, 0, cg.input);
        break;
      }
      case NodeKind::relu:
        route(node, 0, k::relu_backward(cache.outputs[i], g));
        break;
      case NodeKind::maxpool:
        route(node, 0, k::maxpool_backward<T>(cache.argmax.at(i), g, input_of(node, 0).shape()));
        break;
      case NodeKind::fire: {
        const Tensor<T>& x = input_of(node, 0);
        const FireExpansion fire = expand_fire(node.fire(), x.dim(1));
        const FireWeights<T> w = fire_weights(params, node.id);
        const auto& state = cache.fire.at(i);
        auto [g1, g3] = k::split_channels(g, node.fire().e1x1);
        auto c1 = k::conv2d_backward(state.squeezed, w.e1_w, fire.expand1x1().conv,
                                     k::relu_backward(state.expanded1x1, g1));
        auto c3 = k::conv2d_backward(state.squeezed, w.e3_w, fire.expand3x3().conv,
                                     k::relu_backward(state.expanded3x3, g3));
        Tensor<T> g_squeezed = k::eltwise_add(c1.input, c3.input);
        auto cs = k::conv2d_backward(x, w.squeeze_w, fire.squeeze().conv,
                                     k::relu_backward(state.squeezed, g_squeezed));
        grads.at(node.id, "squeeze.weight") = std::move(cs.weights);
        grads.at(node.id, "squeeze.bias") = std::move(cs.bias);
        grads.at(node.id, "expand1x1.weight") = std::move(c1.weights);
        grads.at(node.id, "expand1x1.bias") = std::move(c1.bias);
        grads.at(node.id, "expand3x3.weight") = std::move(c3.weights);
        grads.at(node.id, "expand3x3.bias") = std::move(c3.bias);
        route(node, 0, cs.input);
        break;
      }
      case NodeKind::scale: {
        auto sg = k::scale_backward(input_of(node, 0), params.at(node.id, "gamma"), g);
        grads.at(node.id, "gamma") = std::move(sg.gamma);
        grads.at(node.id, "beta") = std::move(sg.beta);
        route(node, 0, sg.input);
        break;
      }
      case NodeKind::add:
        route(node, 0, g);
        if (!options.detached_shortcuts.contains(node.id)) route(node, 1, g);
        break;
      case NodeKind::global_avg_pool: {
        const Tensor<T>& x = input_of(node, 0);
        route(node, 0, k::global_avg_pool_backward(g.reshaped({g.dim(0), g.dim(1)}), x.shape()));
        break;
      }
      case NodeKind::inner_product: {
        const Tensor<T>& x = input_of(node, 0);
        auto ig = k::inner_product_backward(x, params.at(node.id, "weight"),
                                            g.reshaped({g.dim(0), g.dim(1)}));
        grads.at(node.id, "weight") = std::move(ig.weights);
        grads.at(node.id, "bias") = std::move(ig.bias);
        route(node, 0, ig.input);
        break;
      }
      case NodeKind::dropout: {
        auto mask = cache.dropout_masks.find(i);
        route(node, 0, mask == cache.dropout_masks.end() ? g : k::multiply(g, mask->second));
        break;
      }
    }
  }
  return grads;
}

template ForwardResult<float> forward(const Graph&, const ParamSet<float>&, const Tensor<float>&,
                                      Mode, std::mt19937_64*);
template ForwardResult<double> forward(const Graph&, const ParamSet<double>&,
                                       const Tensor<double>&, Mode, std::mt19937_64*);
template ParamSet<float> backward(const Graph&, const ParamSet<float>&, const ForwardCache<float>&,
                                  const Tensor<float>&, const BackwardOptions&);
template ParamSet<double> backward(const Graph&, const ParamSet<double>&,
                                   const ForwardCache<double>&, const Tensor<double>&,
                                   const BackwardOptions&);

}  // namespace netforge
