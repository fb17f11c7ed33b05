#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "netforge/tensor.hpp"

// Forward/backward numeric kernels. Every function is pure; inputs are never
// modified. Templates are instantiated for float (training) and double
// (gradient checking).
namespace netforge::kernels {

struct ConvParams {
  std::size_t out_channels = 1;
  std::size_t kernel = 1;  // square, odd
  std::size_t stride = 1;
  std::size_t pad = 0;

  bool operator==(const ConvParams&) const = default;
};

// floor((extent + 2*pad - kernel) / stride) + 1; GeometryError when < 1.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                               std::size_t pad);
std::size_t pool_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride);

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights,
                         const Tensor<T>& bias, const ConvParams& params);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const ConvParams& params, const Tensor<T>& upstream);

template <typename T>
struct PoolResult {
  Tensor<T> output;
  // Flat input coordinate of the selected maximum, one per output element.
  std::vector<std::size_t> argmax;
};

template <typename T>
PoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t kernel, std::size_t stride);

template <typename T>
Tensor<T> maxpool_backward(std::span<const std::size_t> argmax, const Tensor<T>& upstream,
                           const Shape& input_shape);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

// Passes upstream where input > 0; the gradient at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream);

template <typename T>
Tensor<T> scale_forward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta);

template <typename T>
struct ScaleGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

template <typename T>
ScaleGrads<T> scale_backward(const Tensor<T>& input, const Tensor<T>& gamma,
                             const Tensor<T>& upstream);

template <typename T>
Tensor<T> eltwise_add(const Tensor<T>& a, const Tensor<T>& b);

// [N,C,H,W] -> [N,C]
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input);

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& upstream, const Shape& input_shape);

// input is [N,D] or any rank-4 tensor flattened to [N, C*H*W]; weights [D,M].
template <typename T>
Tensor<T> inner_product(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);

template <typename T>
struct InnerProductGrads {
  Tensor<T> input;  // shaped like the forward input
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
InnerProductGrads<T> inner_product_backward(const Tensor<T>& input, const Tensor<T>& weights,
                                            const Tensor<T>& upstream);

template <typename T>
struct SoftmaxResult {
  T loss;          // mean cross-entropy
  Tensor<T> probs;
};

template <typename T>
SoftmaxResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels);

// (probs - onehot) / N
template <typename T>
Tensor<T> softmax_xent_backward(const Tensor<T>& probs, std::span<const int> labels);

// Channel concatenation of two [N,Ca,H,W] and [N,Cb,H,W] tensors.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

// Inverse of concat_channels: first `split` channels, then the rest.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& input, std::size_t split);

template <typename T>
Tensor<T> multiply(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace netforge::kernels
