#pragma once

// Independent reference implementations used as test oracles. Deliberately
// naive: direct loops, no shared code with the library kernels.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netforge/tensor.hpp"

namespace oracle {

using netforge::Tensor;

template <typename T>
Tensor<T> random_tensor(netforge::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

// Six nested loops over (n, co, oy, ox, ci, ky, kx) with explicit zero padding.
inline Tensor<double> conv2d(const Tensor<double>& in, const Tensor<double>& w, const Tensor<double>& b,
                             std::size_t stride, std::size_t pad) {
  const std::size_t n = in.dim(0), cin = in.dim(1), h = in.dim(2), wd = in.dim(3);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  Tensor<double> out({n, cout, oh, ow});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = b[co];
          for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long y = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                const long x = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(wd)) continue;
                acc += in.at(i, ci, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) *
                       w.at(co, ci, ky, kx);
              }
          out.at(i, co, oy, ox) = acc;
        }
  return out;
}

// Output extent by enumerating window start positions that fit.
inline std::size_t enumerate_extent(std::size_t extent, std::size_t kernel, std::size_t stride, std::size_t pad) {
  std::size_t count = 0;
  for (std::size_t start = 0; start + kernel <= extent + 2 * pad; start += stride) ++count;
  return count;
}

inline double inner_product_at(const Tensor<double>& in, const Tensor<double>& w, const Tensor<double>& b,
                               std::size_t row, std::size_t col) {
  const std::size_t d = w.dim(0);
  double acc = b[col];
  for (std::size_t i = 0; i < d; ++i) acc += in[row * d + i] * w[i * w.dim(1) + col];
  return acc;
}

// Central differences of a scalar function with respect to every element of x.
inline std::vector<double> numeric_gradient(const std::function<double(const Tensor<double>&)>& f,
                                            const Tensor<double>& x, double eps = 1e-3) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor<double> plus = x, minus = x;
    plus[i] += eps;
    minus[i] -= eps;
    g[i] = (f(plus) - f(minus)) / (2 * eps);
  }
  return g;
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Receptive field by tracing which input positions reach output position 0 in 1-D.
inline std::size_t traced_receptive_field(const std::vector<std::pair<std::size_t, std::size_t>>& chain) {
  std::set<std::size_t> reach{0};
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    std::set<std::size_t> below;
    for (std::size_t o : reach)
      for (std::size_t j = 0; j < it->first; ++j) below.insert(o * it->second + j);
    reach = std::move(below);
  }
  return *reach.rbegin() - *reach.begin() + 1;
}

// Top-k hit by fully sorting class indices (stable on ties, so lower index first).
inline bool topk_hit(const std::vector<float>& row, int label, std::size_t k) {
  std::vector<std::size_t> idx(row.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  k = std::min(k, row.size());
  return std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), static_cast<std::size_t>(label)) !=
         idx.begin() + static_cast<std::ptrdiff_t>(k);
}

// Unique scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("netforge_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
