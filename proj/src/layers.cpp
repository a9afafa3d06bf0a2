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
#include "pixda/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace pixda {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Unfolds one image into rows of a (in*k*k, ld) matrix, starting at column
// offset `cols`; ld is the leading dimension shared by the whole batch.
void im2col(const float* img, int channels, int h, int w, int k, int stride,
            int pad, int oh, int ow, float* cols, std::size_t ld) {
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * ld;
        // Output columns whose input column lies inside the image.
        const int x_lo = std::clamp((pad - kx + stride - 1) / stride, 0, ow);
        const int x_hi = std::clamp(floor_div(w - 1 + pad - kx, stride) + 1, x_lo, ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          float* dst = row + oy * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, 0.0f);
            continue;
          }
          const float* src = img + (c * h + iy) * w + (kx - pad);
          std::fill(dst, dst + x_lo, 0.0f);
          if (stride == 1) {
            std::copy(src + x_lo, src + x_hi, dst + x_lo);
          } else {
            for (int ox = x_lo; ox < x_hi; ++ox) dst[ox] = src[ox * stride];
          }
          std::fill(dst + x_hi, dst + ow, 0.0f);
        }
      }
    }
  }
}

void col2im(const float* cols, int channels, int h, int w, int k, int stride,
            int pad, int oh, int ow, float* img, std::size_t ld) {
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * ld;
        const int x_lo = std::clamp((pad - kx + stride - 1) / stride, 0, ow);
        const int x_hi = std::clamp(floor_div(w - 1 + pad - kx, stride) + 1, x_lo, ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          float* dst = img + (c * h + iy) * w + (kx - pad);
          const float* src = row + oy * ow;
          for (int ox = x_lo; ox < x_hi; ++ox) dst[ox * stride] += src[ox];
        }
      }
    }
  }
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel,
               int stride, int padding)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      weight_(name + ".weight", {out_channels, in_channels * kernel * kernel}),
      bias_(name + ".bias", {out_channels}) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || stride <= 0 ||
      padding < 0) {
    throw InvalidArgument("Conv2d " + name + ": invalid geometry");
  }
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != in_) {
    throw InvalidArgument("Conv2d " + weight_.name + ": expected (N, " +
                          std::to_string(in_) + ", H, W) input, got " +
                          x.shape_string());
  }
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  out_h_ = output_size(h);
  out_w_ = output_size(w);
  if (out_h_ <= 0 || out_w_ <= 0) {
    throw InvalidArgument("Conv2d " + weight_.name + ": input " +
                          x.shape_string() + " too small for kernel");
  }
  in_shape_ = x.shape();
  const int rows = in_ * kernel_ * kernel_;
  const int plane = out_h_ * out_w_;
  const std::size_t ld = static_cast<std::size_t>(n) * plane;
  cols_.resize(static_cast<std::size_t>(rows) * ld);
  for (int i = 0; i < n; ++i) {
    im2col(x.slab(i).data(), in_, h, w, kernel_, stride_, padding_, out_h_,
           out_w_, cols_.data() + static_cast<std::size_t>(i) * plane, ld);
  }
  RowMatrix ymat(out_, static_cast<Eigen::Index>(ld));
  ymat.noalias() = ConstMatMap(weight_.value.data(), out_, rows) *
                   ConstMatMap(cols_.data(), rows, static_cast<Eigen::Index>(ld));
  ymat.colwise() += Eigen::Map<const Eigen::VectorXf>(bias_.value.data(), out_);
  Tensor y({n, out_, out_h_, out_w_});
  for (int i = 0; i < n; ++i) {
    MatMap(y.slab(i).data(), out_, plane) = ymat.middleCols(static_cast<Eigen::Index>(i) * plane, plane);
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out, bool param_grads) {
  const int n = in_shape_.at(0), h = in_shape_[2], w = in_shape_[3];
  if (grad_out.shape() != std::vector<int>{n, out_, out_h_, out_w_}) {
    throw_shape_mismatch("Conv2d::backward " + weight_.name, grad_out.shape(),
                         {n, out_, out_h_, out_w_});
  }
  const int rows = in_ * kernel_ * kernel_;
  const int plane = out_h_ * out_w_;
  const auto ld = static_cast<Eigen::Index>(n) * plane;
  RowMatrix dy(out_, ld);
  for (int i = 0; i < n; ++i) {
    dy.middleCols(static_cast<Eigen::Index>(i) * plane, plane) =
        ConstMatMap(grad_out.slab(i).data(), out_, plane);
  }
  if (param_grads) {
    MatMap(weight_.grad.data(), out_, rows).noalias() +=
        dy * ConstMatMap(cols_.data(), rows, ld).transpose();
    Eigen::Map<Eigen::VectorXf>(bias_.grad.data(), out_) += dy.rowwise().sum();
  }
  RowMatrix dcols(rows, ld);
  dcols.noalias() = ConstMatMap(weight_.value.data(), out_, rows).transpose() * dy;
  Tensor dx(in_shape_);
  for (int i = 0; i < n; ++i) {
    col2im(dcols.data() + static_cast<std::size_t>(i) * plane, in_, h, w, kernel_, stride_,
           padding_, out_h_, out_w_, dx.slab(i).data(), static_cast<std::size_t>(ld));
  }
  return dx;
}

Tensor LeakyRelu::forward(const Tensor& x) {
  input_ = x;
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] > 0.0f ? x[i] : slope_ * x[i];
  }
  return y;
}

Tensor LeakyRelu::backward(const Tensor& grad_out) const {
  if (!grad_out.same_shape(input_)) {
    throw_shape_mismatch("LeakyRelu::backward", grad_out.shape(), input_.shape());
  }
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    dx[i] = input_[i] > 0.0f ? grad_out[i] : slope_ * grad_out[i];
  }
  return dx;
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, c, h * factor, w * factor});
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < c; ++k)
      for (int yy = 0; yy < h * factor; ++yy)
        for (int xx = 0; xx < w * factor; ++xx)
          y.at(i, k, yy, xx) = x.at(i, k, yy / factor, xx / factor);
  return y;
}

Tensor upsample_nearest_backward(const Tensor& grad_out, int factor) {
  const int n = grad_out.dim(0), c = grad_out.dim(1);
  const int h = grad_out.dim(2) / factor, w = grad_out.dim(3) / factor;
  Tensor dx({n, c, h, w});
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < c; ++k)
      for (int yy = 0; yy < h * factor; ++yy)
        for (int xx = 0; xx < w * factor; ++xx)
          dx.at(i, k, yy / factor, xx / factor) += grad_out.at(i, k, yy, xx);
  return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw_shape_mismatch("concat_channels", a.shape(), b.shape());
  }
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  Tensor y({n, ca + cb, a.dim(2), a.dim(3)});
  for (int i = 0; i < n; ++i) {
    auto dst = y.slab(i);
    auto sa = a.slab(i);
    auto sb = b.slab(i);
    std::copy(sa.begin(), sa.end(), dst.begin());
    std::copy(sb.begin(), sb.end(), dst.begin() + static_cast<std::ptrdiff_t>(sa.size()));
  }
  return y;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, int first) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor a({n, first, h, w});
  Tensor b({n, c - first, h, w});
  for (int i = 0; i < n; ++i) {
    auto src = x.slab(i);
    auto sa = a.slab(i);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(sa.size()), sa.begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(sa.size()), src.end(),
              b.slab(i).begin());
  }
  return {std::move(a), std::move(b)};
}

float sigmoid(float z) {
  if (z >= 0.0f) return 1.0f / (1.0f + std::exp(-z));
  const float e = std::exp(z);
  return e / (1.0f + e);
}

}  // namespace pixda
