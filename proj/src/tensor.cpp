#include "netforge/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace netforge {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {
void check_rank(const Shape& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw ShapeError("tensor rank must be 1..4, got " + std::to_string(shape.size()));
  }
}
}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)) {
  check_rank(shape_);
  data_.assign(element_count(shape_), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_rank(shape_);
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     to_string(shape_));
  }
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor<T>(std::move(shape), data_);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace netforge
