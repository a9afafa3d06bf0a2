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
#ifndef PIXDA_LAYERS_HPP_
#define PIXDA_LAYERS_HPP_

#include <string>
#include <vector>

#include "pixda/tensor.hpp"

namespace pixda {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(shape) {}
};

// 2-D convolution over (N, C, H, W) tensors. forward() caches the unfolded
// input; backward() must follow the matching forward().
class Conv2d {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel,
         int stride, int padding);

  Tensor forward(const Tensor& x);
  // Returns the input gradient. Parameter gradients are accumulated into
  // grad only when param_grads is true.
  Tensor backward(const Tensor& grad_out, bool param_grads = true);

  int output_size(int input_size) const {
    return (input_size + 2 * padding_ - kernel_) / stride_ + 1;
  }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  int padding() const { return padding_; }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  void collect(std::vector<Parameter*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  int in_, out_, kernel_, stride_, padding_;
  Parameter weight_;  // (out, in * k * k)
  Parameter bias_;    // (out)
  std::vector<int> in_shape_;
  std::vector<float> cols_;  // (in*k*k, N*Ho*Wo), images side by side
  int out_h_ = 0, out_w_ = 0;
};

// max(x, slope * x). slope = 0 gives a rectifier.
class LeakyRelu {
 public:
  explicit LeakyRelu(float slope) : slope_(slope) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  float slope_;
  Tensor input_;
};

// Nearest-neighbour upsampling by an integer factor.
Tensor upsample_nearest(const Tensor& x, int factor);
Tensor upsample_nearest_backward(const Tensor& grad_out, int factor);

// Concatenates two (N, *, H, W) tensors along channels, and splits back.
Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels(const Tensor& x, int first);

float sigmoid(float z);

}  // namespace pixda

#endif  // PIXDA_LAYERS_HPP_
