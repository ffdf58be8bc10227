// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mspred/common.hpp"

namespace mspred {

// Dense row-major tensor. A plain value type: copies copy storage, moves are
// cheap. All neural-network arrays in this project are rank 1..5.
template <class T>
class TensorT {
 public:
  using Shape = std::vector<long>;

  TensorT() = default;

  explicit TensorT(Shape shape) : shape_(std::move(shape)) {
    data_.assign(count(shape_), T(0));
  }

  TensorT(Shape shape, T fill_value) : shape_(std::move(shape)) {
    data_.assign(count(shape_), fill_value);
  }

  TensorT(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_))
      throw ShapeError("tensor data size does not match shape " + shape_str());
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }
  static TensorT full(Shape shape, T v) { return TensorT(std::move(shape), v); }

  bool empty() const { return data_.empty() && shape_.empty(); }
  int rank() const { return static_cast<int>(shape_.size()); }
  long dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  template <class... Ix>
  T& at(Ix... ix) {
    return data_[offset(ix...)];
  }
  template <class... Ix>
  const T& at(Ix... ix) const {
    return data_[offset(ix...)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  TensorT reshaped(Shape new_shape) const {
    if (count(new_shape) != data_.size())
      throw ShapeError("reshape from " + shape_str() + " changes element count");
    TensorT out;
    out.shape_ = std::move(new_shape);
    out.data_ = data_;
    return out;
  }

  template <class U>
  TensorT<U> cast() const {
    TensorT<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i)
      os << shape_[i] << (i + 1 < shape_.size() ? "," : "");
    os << ']';
    return os.str();
  }

  static std::size_t count(const Shape& s) {
    std::size_t n = 1;
    for (long d : s) {
      if (d < 0) throw ShapeError("negative tensor dimension");
      n *= static_cast<std::size_t>(d);
    }
    return s.empty() ? 0 : n;
  }

 private:
  template <class... Ix>
  std::size_t offset(Ix... ix) const {
    const long idx[] = {static_cast<long>(ix)...};
    std::size_t off = 0;
    for (std::size_t d = 0; d < sizeof...(Ix); ++d)
      off = off * static_cast<std::size_t>(shape_[d]) + static_cast<std::size_t>(idx[d]);
    return off;
  }

  Shape shape_;
  std::vector<T> data_;
};

using TensorF = TensorT<float>;
using TensorD = TensorT<double>;

template <class T>
bool allclose(const TensorT<T>& a, const TensorT<T>& b, double atol = 1e-6,
              double rtol = 0.0) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    if (d > atol + rtol * std::abs(static_cast<double>(b[i]))) return false;
  }
  return true;
}

}  // namespace mspred
