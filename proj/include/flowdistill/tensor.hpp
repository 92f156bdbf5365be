#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "flowdistill/errors.hpp"

namespace fd {

inline std::string shape_str(const std::vector<int64_t>& shape) {
  if (shape.empty()) return "scalar";
  std::string s;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

// Dense row-major tensor. Training uses float, verification mode double.
template <typename S>
struct TensorT {
  std::vector<int64_t> shape;
  std::vector<S> values;

  TensorT() = default;
  explicit TensorT(std::vector<int64_t> sh) : shape(std::move(sh)) {
    values.assign(static_cast<size_t>(shape_numel(shape)), S(0));
  }
  TensorT(std::vector<int64_t> sh, std::vector<S> vals) : shape(std::move(sh)), values(std::move(vals)) {
    if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
      throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                       std::to_string(values.size()) + " values");
    }
  }

  static int64_t shape_numel(const std::vector<int64_t>& sh) {
    int64_t n = 1;
    for (int64_t d : sh) {
      if (d < 0) throw ShapeError("tensor: negative dimension in " + shape_str(sh));
      n *= d;
    }
    return n;
  }

  static TensorT zeros(std::vector<int64_t> sh) { return TensorT(std::move(sh)); }

  static TensorT full(std::vector<int64_t> sh, S v) {
    TensorT t(std::move(sh));
    std::fill(t.values.begin(), t.values.end(), v);
    return t;
  }

  static TensorT scalar(S v) { return TensorT({1}, {v}); }

  int64_t numel() const { return static_cast<int64_t>(values.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  S& operator[](int64_t i) { return values[static_cast<size_t>(i)]; }
  const S& operator[](int64_t i) const { return values[static_cast<size_t>(i)]; }

  S& at(int64_t i, int64_t j) { return values[static_cast<size_t>(i * shape[1] + j)]; }
  const S& at(int64_t i, int64_t j) const { return values[static_cast<size_t>(i * shape[1] + j)]; }
  S& at(int64_t i, int64_t j, int64_t k) {
    return values[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  const S& at(int64_t i, int64_t j, int64_t k) const {
    return values[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  S& at(int64_t i, int64_t j, int64_t k, int64_t l) {
    return values[static_cast<size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
  }
  const S& at(int64_t i, int64_t j, int64_t k, int64_t l) const {
    return values[static_cast<size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
  }

  S* data() { return values.data(); }
  const S* data() const { return values.data(); }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename Out, typename In>
TensorT<Out> cast_tensor(const TensorT<In>& t) {
  TensorT<Out> r;
  r.shape = t.shape;
  r.values.resize(t.values.size());
  for (size_t i = 0; i < t.values.size(); ++i) r.values[i] = static_cast<Out>(t.values[i]);
  return r;
}

}  // namespace fd
