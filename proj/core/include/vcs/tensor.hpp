#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vcs/common.hpp"

namespace vcs {

/// Dense row-major n-d array. Network tensors use [C,T,H,W] with an optional
/// leading batch dim; kernels operate in f32 for training and f64 for
/// finite-difference checks.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(checked_numel(shape), T(0));
  }
  Tensor(std::vector<int> s, T fill) : shape(std::move(s)) {
    data.assign(checked_numel(shape), fill);
  }

  static std::size_t checked_numel(const std::vector<int>& s) {
    if (s.empty()) throw DimensionError("Tensor: empty shape");
    std::size_t n = 1;
    for (int d : s) {
      if (d < 1) throw DimensionError("Tensor: shape entries must be >= 1");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }
  std::size_t bytes() const { return data.size() * sizeof(T); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  void fill_randn(std::mt19937_64& rng, T stddev) {
    std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
    for (T& v : data) v = static_cast<T>(dist(rng));
  }

  void fill_uniform(std::mt19937_64& rng, T lo, T hi) {
    std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
    for (T& v : data) v = static_cast<T>(dist(rng));
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(where) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

}  // namespace vcs
