#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "netforge/graph.hpp"
#include "netforge/params.hpp"

namespace netforge {

enum class Mode { train, eval };

// Everything backward() needs from a forward pass. Activations are stored
// per node index as rank-4 NCHW tensors (vector outputs are [N,C,1,1]).
template <typename T>
struct ForwardCache {
  struct FireState {
    Tensor<T> squeezed;
    Tensor<T> expanded1x1;
    Tensor<T> expanded3x3;
  };

  std::vector<Tensor<T>> outputs;
  std::map<std::size_t, std::vector<std::size_t>> argmax;
  std::map<std::size_t, Tensor<T>> dropout_masks;
  std::map<std::size_t, FireState> fire;
  std::vector<std::size_t> order;
  std::uint64_t generation = 0;
  std::uint64_t fingerprint = 0;
  Mode mode = Mode::eval;
};

template <typename T>
struct ForwardResult {
  Tensor<T> logits;  // [N, classes], the input of the softmax_output node
  ForwardCache<T> cache;
};

// Runs every node in topological order. `rng` is required in train mode when
// the graph contains dropout. Throws StateError for missing/mis-shaped weights.
template <typename T>
ForwardResult<T> forward(const Graph& graph, const ParamSet<T>& params, const Tensor<T>& batch,
                         Mode mode, std::mt19937_64* rng = nullptr);

struct BackwardOptions {
  // Add nodes whose second (shortcut) operand receives no gradient.
  std::set<std::string> detached_shortcuts;
};

// Weight gradients for every slot of the graph, given dLoss/dLogits.
// Throws StateError when the cache does not belong to this graph/weights.
template <typename T>
ParamSet<T> backward(const Graph& graph, const ParamSet<T>& params, const ForwardCache<T>& cache,
                     const Tensor<T>& loss_grad, const BackwardOptions& options = {});

std::uint64_t graph_fingerprint(const Graph& graph);

}  // namespace netforge
