#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "netforge/error.hpp"

namespace netforge {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major tensor of rank 1..4. Rank-4 tensors are NCHW.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  T& at(std::size_t row, std::size_t col) { return data_[row * shape_[1] + col]; }
  const T& at(std::size_t row, std::size_t col) const { return data_[row * shape_[1] + col]; }

  void fill(T value);
  // Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Throws ShapeError unless the tensors have identical shapes.
template <typename T, typename U>
void require_same_shape(const Tensor<T>& a, const Tensor<U>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

// Value plus zero-initialized gradient of identical shape.
template <typename T>
struct GradPair {
  Tensor<T> value;
  Tensor<T> grad;

  explicit GradPair(Tensor<T> v) : value(std::move(v)), grad(value.shape()) {}
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace netforge
