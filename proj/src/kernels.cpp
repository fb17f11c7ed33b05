#include "netforge/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "netforge/parallel.hpp"

namespace netforge::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Samples per work chunk; fixes the reduction order of weight gradients.
constexpr std::size_t kBatchChunk = 8;

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(shape));
  }
}

struct ConvGeometry {
  std::size_t batch, in_c, in_h, in_w, out_c, out_h, out_w, k, stride, pad;

  std::size_t patch() const { return in_c * k * k; }
  std::size_t pixels() const { return out_h * out_w; }
  bool is_pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& input, const Tensor<T>& weights,
                           const ConvParams& params) {
  require_rank(input.shape(), 4, "conv2d input");
  require_rank(weights.shape(), 4, "conv2d weights");
  if (params.kernel == 0 || params.stride == 0 || params.out_channels == 0) {
    throw GeometryError("conv2d: kernel, stride and out_channels must be positive");
  }
  const Shape expected{params.out_channels, input.dim(1), params.kernel, params.kernel};
  if (weights.shape() != expected) {
    throw ShapeError("conv2d weights " + to_string(weights.shape()) + " do not match expected " +
                     to_string(expected));
  }
  ConvGeometry g{};
  g.batch = input.dim(0);
  g.in_c = input.dim(1);
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.out_c = params.out_channels;
  g.k = params.kernel;
  g.stride = params.stride;
  g.pad = params.pad;
  g.out_h = conv_output_extent(g.in_h, g.k, g.stride, g.pad);
  g.out_w = conv_output_extent(g.in_w, g.k, g.stride, g.pad);
  return g;
}

// Unfolds one [C,H,W] sample into a [C*k*k, out_h*out_w] patch matrix.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const long pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.in_c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = col + ((c * g.k + ky) * g.k + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - pad;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = image + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.in_w)) ? T{0}
                                                                   : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Scatter-adds a patch matrix back into a zeroed [C,H,W] sample.
template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* image) {
  const long pad = static_cast<long>(g.pad);
  for (std::size_t c = 0; c < g.in_c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = col + ((c * g.k + ky) * g.k + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
          T* dst = image + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - pad;
            if (ix >= 0 && ix < static_cast<long>(g.in_w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                               std::size_t pad) {
  if (stride == 0 || kernel == 0) throw GeometryError("kernel and stride must be positive");
  const std::size_t padded = extent + 2 * pad;
  if (padded < kernel) {
    throw GeometryError("window " + std::to_string(kernel) + " exceeds padded extent " +
                        std::to_string(padded));
  }
  return (padded - kernel) / stride + 1;
}

std::size_t pool_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride) {
  return conv_output_extent(extent, kernel, stride, 0);
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weights,
                         const Tensor<T>& bias, const ConvParams& params) {
  const ConvGeometry g = conv_geometry(input, weights, params);
  if (bias.shape() != Shape{g.out_c}) {
    throw ShapeError("conv2d bias " + to_string(bias.shape()) + " does not match " +
                     std::to_string(g.out_c) + " output channels");
  }
  Tensor<T> output({g.batch, g.out_c, g.out_h, g.out_w});
  const ConstMatMap<T> w(weights.data().data(), g.out_c, g.patch());
  const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias.data().data(), g.out_c);
  const std::size_t in_stride = g.in_c * g.in_h * g.in_w;
  const std::size_t out_stride = g.out_c * g.pixels();

  parallel_chunks(g.batch, kBatchChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<T> col(g.is_pointwise() ? 0 : g.patch() * g.pixels());
    for (std::size_t n = begin; n < end; ++n) {
      const T* image = input.data().data() + n * in_stride;
      if (!g.is_pointwise()) im2col(image, g, col.data());
      const T* patches = g.is_pointwise() ? image : col.data();
      MatMap<T> out(output.data().data() + n * out_stride, g.out_c, g.pixels());
      out.noalias() = w * ConstMatMap<T>(patches, g.patch(), g.pixels());
      out.colwise() += b;
    }
  });
  return output;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const ConvParams& params, const Tensor<T>& upstream) {
  const ConvGeometry g = conv_geometry(input, weights, params);
  const Shape out_shape{g.batch, g.out_c, g.out_h, g.out_w};
  if (upstream.shape() != out_shape) {
    throw ShapeError("conv2d upstream " + to_string(upstream.shape()) + " does not match output " +
                     to_string(out_shape));
  }
  ConvGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(weights.shape()), Tensor<T>({g.out_c})};
  const ConstMatMap<T> w(weights.data().data(), g.out_c, g.patch());
  const std::size_t in_stride = g.in_c * g.in_h * g.in_w;
  const std::size_t out_stride = g.out_c * g.pixels();
  const std::size_t chunks = chunk_count(g.batch, kBatchChunk);
  std::vector<RowMat<T>> partial_w(chunks);
  std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> partial_b(chunks);

  parallel_chunks(g.batch, kBatchChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    RowMat<T> dw = RowMat<T>::Zero(g.out_c, g.patch());
    Eigen::Matrix<T, Eigen::Dynamic, 1> db = Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(g.out_c);
    std::vector<T> col(g.is_pointwise() ? 0 : g.patch() * g.pixels());
    RowMat<T> dcol(g.patch(), g.pixels());
    for (std::size_t n = begin; n < end; ++n) {
      const T* image = input.data().data() + n * in_stride;
      if (!g.is_pointwise()) im2col(image, g, col.data());
      const T* patches = g.is_pointwise() ? image : col.data();
      const ConstMatMap<T> dy(upstream.data().data() + n * out_stride, g.out_c, g.pixels());
      dw.noalias() += dy * ConstMatMap<T>(patches, g.patch(), g.pixels()).transpose();
      db += dy.rowwise().sum();
      T* dx = grads.input.data().data() + n * in_stride;
      if (g.is_pointwise()) {
        MatMap<T>(dx, g.patch(), g.pixels()).noalias() = w.transpose() * dy;
      } else {
        dcol.noalias() = w.transpose() * dy;
        col2im(dcol.data(), g, dx);
      }
    }
    partial_w[chunk] = std::move(dw);
    partial_b[chunk] = std::move(db);
  });

  MatMap<T> dw(grads.weights.data().data(), g.out_c, g.patch());
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(grads.bias.data().data(), g.out_c);
  for (std::size_t c = 0; c < chunks; ++c) {
    dw += partial_w[c];
    db += partial_b[c];
  }
  return grads;
}

template <typename T>
PoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t kernel, std::size_t stride) {
  require_rank(input.shape(), 4, "maxpool input");
  const std::size_t n_ = input.dim(0), c_ = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = pool_output_extent(h, kernel, stride);
  const std::size_t ow = pool_output_extent(w, kernel, stride);
  PoolResult<T> result{Tensor<T>({n_, c_, oh, ow}), {}};
  result.argmax.resize(result.output.size());
  const auto x = input.data();
  std::size_t out = 0;
  for (std::size_t plane = 0; plane < n_ * c_; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++out) {
        // Row-major scan with strict '>' keeps the smallest flat index on ties.
        std::size_t best = base + (oy * stride) * w + ox * stride;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = base + (oy * stride + ky) * w + ox * stride + kx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        result.output[out] = x[best];
        result.argmax[out] = best;
      }
    }
  }
  return result;
}

template <typename T>
Tensor<T> maxpool_backward(std::span<const std::size_t> argmax, const Tensor<T>& upstream,
                           const Shape& input_shape) {
  if (argmax.size() != upstream.size()) {
    throw CorruptionError("maxpool_backward: " + std::to_string(argmax.size()) +
                          " indices for " + std::to_string(upstream.size()) + " upstream values");
  }
  Tensor<T> grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= grad.size()) {
      throw CorruptionError("maxpool_backward: index " + std::to_string(argmax[i]) +
                            " out of range for input " + to_string(input_shape));
    }
    grad[argmax[i]] += upstream[i];
  }
  return grad;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream) {
  require_same_shape(input, upstream, "relu_backward");
  Tensor<T> grad(input.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = input[i] > T{0} ? upstream[i] : T{0};
  return grad;
}

template <typename T>
Tensor<T> scale_forward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta) {
  require_rank(input.shape(), 4, "scale input");
  const std::size_t channels = input.dim(1);
  if (gamma.shape() != Shape{channels} || beta.shape() != Shape{channels}) {
    throw ShapeError("scale: gamma/beta must have " + std::to_string(channels) + " entries");
  }
  Tensor<T> out(input.shape());
  const std::size_t plane = input.dim(2) * input.dim(3);
  for (std::size_t n = 0; n < input.dim(0); ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (n * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) out[base + i] = gamma[c] * input[base + i] + beta[c];
    }
  }
  return out;
}

template <typename T>
ScaleGrads<T> scale_backward(const Tensor<T>& input, const Tensor<T>& gamma,
                             const Tensor<T>& upstream) {
  require_same_shape(input, upstream, "scale_backward");
  const std::size_t channels = input.dim(1);
  if (gamma.shape() != Shape{channels}) throw ShapeError("scale_backward: gamma size mismatch");
  ScaleGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>({channels}), Tensor<T>({channels})};
  const std::size_t plane = input.dim(2) * input.dim(3);
  for (std::size_t n = 0; n < input.dim(0); ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (n * channels + c) * plane;
      T dg{0}, db{0};
      for (std::size_t i = 0; i < plane; ++i) {
        const T up = upstream[base + i];
        grads.input[base + i] = gamma[c] * up;
        dg += up * input[base + i];
        db += up;
      }
      grads.gamma[c] += dg;
      grads.beta[c] += db;
    }
  }
  return grads;
}

template <typename T>
Tensor<T> eltwise_add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "eltwise_add");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  require_rank(input.shape(), 4, "global_avg_pool input");
  const std::size_t n_ = input.dim(0), c_ = input.dim(1);
  const std::size_t plane = input.dim(2) * input.dim(3);
  Tensor<T> out({n_, c_});
  for (std::size_t i = 0; i < n_ * c_; ++i) {
    T sum{0};
    for (std::size_t p = 0; p < plane; ++p) sum += input[i * plane + p];
    out[i] = sum / static_cast<T>(plane);
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& upstream, const Shape& input_shape) {
  if (input_shape.size() != 4 || upstream.shape() != Shape{input_shape[0], input_shape[1]}) {
    throw ShapeError("global_avg_pool_backward: upstream " + to_string(upstream.shape()) +
                     " inconsistent with input " + to_string(input_shape));
  }
  Tensor<T> grad(input_shape);
  const std::size_t plane = input_shape[2] * input_shape[3];
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    const T share = upstream[i] / static_cast<T>(plane);
    for (std::size_t p = 0; p < plane; ++p) grad[i * plane + p] = share;
  }
  return grad;
}

template <typename T>
Tensor<T> inner_product(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  require_rank(weights.shape(), 2, "inner_product weights");
  const std::size_t batch = input.dim(0);
  const std::size_t d = input.size() / std::max<std::size_t>(batch, 1);
  const std::size_t m = weights.dim(1);
  if (weights.dim(0) != d) {
    throw ShapeError("inner_product: input features " + std::to_string(d) + " vs weights " +
                     to_string(weights.shape()));
  }
  if (bias.shape() != Shape{m}) throw ShapeError("inner_product: bias size mismatch");
  Tensor<T> out({batch, m});
  MatMap<T> y(out.data().data(), batch, m);
  y.noalias() = ConstMatMap<T>(input.data().data(), batch, d) *
                ConstMatMap<T>(weights.data().data(), d, m);
  y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data().data(), m);
  return out;
}

template <typename T>
InnerProductGrads<T> inner_product_backward(const Tensor<T>& input, const Tensor<T>& weights,
                                            const Tensor<T>& upstream) {
  const std::size_t batch = input.dim(0);
  const std::size_t d = input.size() / std::max<std::size_t>(batch, 1);
  const std::size_t m = weights.dim(1);
  if (weights.dim(0) != d || upstream.shape() != Shape{batch, m}) {
    throw ShapeError("inner_product_backward: upstream " + to_string(upstream.shape()) +
                     " inconsistent with weights " + to_string(weights.shape()));
  }
  InnerProductGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(weights.shape()),
                             Tensor<T>({m})};
  const ConstMatMap<T> x(input.data().data(), batch, d);
  const ConstMatMap<T> w(weights.data().data(), d, m);
  const ConstMatMap<T> dy(upstream.data().data(), batch, m);
  MatMap<T>(grads.input.data().data(), batch, d).noalias() = dy * w.transpose();
  MatMap<T>(grads.weights.data().data(), d, m).noalias() = x.transpose() * dy;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(grads.bias.data().data(), m) =
      dy.colwise().sum();
  return grads;
}

template <typename T>
SoftmaxResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels) {
  require_rank(logits.shape(), 2, "softmax logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) {
    throw InputError("softmax_xent: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  SoftmaxResult<T> result{T{0}, Tensor<T>(logits.shape())};
  for (std::size_t n = 0; n < batch; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InputError("softmax_xent: label " + std::to_string(label) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
    const T* row = logits.data().data() + n * classes;
    T* prob = result.probs.data().data() + n * classes;
    const T peak = *std::max_element(row, row + classes);
    T sum{0};
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - peak);
    for (std::size_t c = 0; c < classes; ++c) prob[c] = std::exp(row[c] - peak) / sum;
    // log-sum-exp form keeps the loss finite when the true-class probability underflows
    result.loss += std::log(sum) - (row[label] - peak);
  }
  if (batch) result.loss /= static_cast<T>(batch);
  return result;
}

template <typename T>
Tensor<T> softmax_xent_backward(const Tensor<T>& probs, std::span<const int> labels) {
  require_rank(probs.shape(), 2, "softmax probs");
  const std::size_t batch = probs.dim(0), classes = probs.dim(1);
  if (labels.size() != batch) throw InputError("softmax_xent_backward: label count mismatch");
  Tensor<T> grad = probs;
  for (std::size_t n = 0; n < batch; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InputError("softmax_xent_backward: label out of range");
    }
    grad.at(n, static_cast<std::size_t>(label)) -= T{1};
  }
  for (auto& v : grad.data()) v /= static_cast<T>(batch);
  return grad;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a.shape(), 4, "concat lhs");
  require_rank(b.shape(), 4, "concat rhs");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const std::size_t plane = a.dim(2) * a.dim(3);
  const std::size_t ca = a.dim(1), cb = b.dim(1);
  Tensor<T> out({a.dim(0), ca + cb, a.dim(2), a.dim(3)});
  for (std::size_t n = 0; n < a.dim(0); ++n) {
    std::copy_n(a.data().data() + n * ca * plane, ca * plane,
                out.data().data() + n * (ca + cb) * plane);
    std::copy_n(b.data().data() + n * cb * plane, cb * plane,
                out.data().data() + (n * (ca + cb) + ca) * plane);
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& input, std::size_t split) {
  require_rank(input.shape(), 4, "split input");
  const std::size_t channels = input.dim(1);
  if (split == 0 || split >= channels) throw ShapeError("split_channels: bad split point");
  const std::size_t plane = input.dim(2) * input.dim(3);
  const std::size_t rest = channels - split;
  Tensor<T> first({input.dim(0), split, input.dim(2), input.dim(3)});
  Tensor<T> second({input.dim(0), rest, input.dim(2), input.dim(3)});
  for (std::size_t n = 0; n < input.dim(0); ++n) {
    const T* src = input.data().data() + n * channels * plane;
    std::copy_n(src, split * plane, first.data().data() + n * split * plane);
    std::copy_n(src + split * plane, rest * plane, second.data().data() + n * rest * plane);
  }
  return {std::move(first), std::move(second)};
}

template <typename T>
Tensor<T> multiply(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "multiply");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

#define NETFORGE_INSTANTIATE(T)                                                                 \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                    const ConvParams&);                                          \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const ConvParams&,   \
                                        const Tensor<T>&);                                       \
  template PoolResult<T> maxpool_forward(const Tensor<T>&, std::size_t, std::size_t);           \
  template Tensor<T> maxpool_backward(std::span<const std::size_t>, const Tensor<T>&,           \
                                      const Shape&);                                             \
  template Tensor<T> relu(const Tensor<T>&);                                                     \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> scale_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template ScaleGrads<T> scale_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> eltwise_add(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                          \
  template Tensor<T> global_avg_pool_backward(const Tensor<T>&, const Shape&);                   \
  template Tensor<T> inner_product(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template InnerProductGrads<T> inner_product_backward(const Tensor<T>&, const Tensor<T>&,       \
                                                       const Tensor<T>&);                        \
  template SoftmaxResult<T> softmax_xent(const Tensor<T>&, std::span<const int>);                \
  template Tensor<T> softmax_xent_backward(const Tensor<T>&, std::span<const int>);              \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                        \
  template std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>&, std::size_t);        \
  template Tensor<T> multiply(const Tensor<T>&, const Tensor<T>&);

NETFORGE_INSTANTIATE(float)
NETFORGE_INSTANTIATE(double)

#undef NETFORGE_INSTANTIATE

}  // namespace netforge::kernels
