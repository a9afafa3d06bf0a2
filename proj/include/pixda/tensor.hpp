/* Copyright 2026 The pixda Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef PIXDA_TENSOR_HPP_
#define PIXDA_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pixda/errors.hpp"

namespace pixda {

// Dense row-major array with a runtime shape. Used as (N, C, H, W) float
// activations by the models and as (C, H, W) / (H, W) double maps by the
// losses.
template <typename T>
class Array {
 public:
  using value_type = T;

  Array() = default;
  explicit Array(std::vector<int> shape, T fill = T{})
      : shape_(std::move(shape)), data_(count(shape_), fill) {}
  Array(std::vector<int> shape, std::vector<T> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != count(shape_)) {
      throw InvalidArgument("Array: value count does not match shape " +
                            shape_string());
    }
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int a, int b) { return data_[index(a, b)]; }
  const T& at(int a, int b) const { return data_[index(a, b)]; }
  T& at(int a, int b, int c) { return data_[index(a, b, c)]; }
  const T& at(int a, int b, int c) const { return data_[index(a, b, c)]; }
  T& at(int a, int b, int c, int d) { return data_[index(a, b, c, d)]; }
  const T& at(int a, int b, int c, int d) const {
    return data_[index(a, b, c, d)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Array& o) const { return shape_ == o.shape_; }

  // Contiguous slice along the leading axis, e.g. one image of a batch.
  std::span<T> slab(int i) {
    const std::size_t n = data_.size() / static_cast<std::size_t>(shape_[0]);
    return {data_.data() + n * static_cast<std::size_t>(i), n};
  }
  std::span<const T> slab(int i) const {
    const std::size_t n = data_.size() / static_cast<std::size_t>(shape_[0]);
    return {data_.data() + n * static_cast<std::size_t>(i), n};
  }

  std::string shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

  static std::size_t count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw InvalidArgument("Array: negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

 private:
  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a) * shape_[1] + b;
  }
  std::size_t index(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c;
  }
  std::size_t index(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) *
               shape_[3] +
           d;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

using Tensor = Array<float>;
using RealMap = Array<double>;

inline constexpr int kIgnoreIndex = 255;

// Per-pixel class probabilities, shape (C, H, W).
struct ProbMap {
  Array<double> values;

  int classes() const { return values.dim(0); }
  int height() const { return values.dim(1); }
  int width() const { return values.dim(2); }
  double at(int c, int y, int x) const { return values.at(c, y, x); }
};

// Integer class map, shape (H, W); entries in [0, C) or ignore_index.
struct LabelMap {
  Array<std::int32_t> values;
  int ignore_index = kIgnoreIndex;

  LabelMap() = default;
  LabelMap(int height, int width, std::int32_t fill = 0,
           int ignore = kIgnoreIndex)
      : values({height, width}, fill), ignore_index(ignore) {}

  int height() const { return values.dim(0); }
  int width() const { return values.dim(1); }
  std::size_t size() const { return values.size(); }
  bool is_valid(std::size_t i) const { return values[i] != ignore_index; }
  std::size_t valid_count() const;
  // Throws InvalidArgument when a non-ignore entry is outside [0, classes).
  void check_classes(int classes) const;
};

// Shape error with both shapes in the message.
[[noreturn]] void throw_shape_mismatch(const std::string& where,
                                       const std::vector<int>& a,
                                       const std::vector<int>& b);

// Softmax over the channel axis of an (N, C, H, W) tensor.
Tensor softmax_channels(const Tensor& logits);
// Backward of softmax_channels given its output and the upstream gradient.
Tensor softmax_channels_backward(const Tensor& probs, const Tensor& grad);

// Image n of an (N, C, H, W) float tensor as a double ProbMap.
ProbMap prob_map_of(const Tensor& probs, int n);
// Channel-0 map of image n of an (N, 1, H, W) tensor, as doubles.
RealMap map_of(const Tensor& t, int n);

// Per-pixel argmax over channels of image n.
LabelMap argmax_labels(const Tensor& scores, int n);

// Stacks (C, H, W) tensors into one (N, C, H, W) batch.
Tensor stack(std::span<const Tensor* const> items);

}  // namespace pixda

#endif  // PIXDA_TENSOR_HPP_
