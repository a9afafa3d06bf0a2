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
#include "pixda/style_transfer.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <vector>

namespace pixda {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer alloc(std::size_t n) {
  return FftwBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

class Plan {
 public:
  Plan(int h, int w, fftw_complex* in, fftw_complex* out, int sign)
      : plan_(fftw_plan_dft_2d(h, w, in, out, sign, FFTW_ESTIMATE)) {}
  ~Plan() { fftw_destroy_plan(plan_); }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  void run() { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

bool in_window(int k, int n, int half) {
  // Signed frequency index of bin k is k for k <= n/2, k - n otherwise.
  return k <= half || k >= n - half;
}

}  // namespace

void FdaParams::validate() const {
  if (!(beta >= 0.0 && beta <= 0.5)) {
    throw InvalidArgument("fda beta must lie in [0, 0.5]");
  }
}

std::pair<int, int> fda_window(int height, int width, double beta) {
  return {static_cast<int>(std::floor(beta * height)),
          static_cast<int>(std::floor(beta * width))};
}

Tensor fda_translate_unclamped(const Tensor& src, const Tensor& style,
                               const FdaParams& params) {
  params.validate();
  if (src.rank() != 3 || src.dim(0) != 3) {
    throw InvalidArgument("fda_translate: expected a (3, H, W) source, got " +
                          src.shape_string());
  }
  if (!src.same_shape(style)) throw_shape_mismatch("fda_translate", src.shape(), style.shape());
  const int h = src.dim(1), w = src.dim(2);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const auto [bh, bw] = fda_window(h, w, params.beta);

  FftwBuffer a_in = alloc(n), a_out = alloc(n), b_in = alloc(n), b_out = alloc(n);
  Plan fwd_a(h, w, a_in.get(), a_out.get(), FFTW_FORWARD);
  Plan fwd_b(h, w, b_in.get(), b_out.get(), FFTW_FORWARD);
  Plan inv(h, w, a_out.get(), a_in.get(), FFTW_BACKWARD);

  Tensor out(src.shape());
  for (int c = 0; c < 3; ++c) {
    const float* s = src.data() + c * n;
    const float* t = style.data() + c * n;
    for (std::size_t i = 0; i < n; ++i) {
      a_in[i][0] = s[i];
      a_in[i][1] = 0.0;
      b_in[i][0] = t[i];
      b_in[i][1] = 0.0;
    }
    fwd_a.run();
    fwd_b.run();
    for (int y = 0; y < h; ++y) {
      if (!in_window(y, h, bh)) continue;
      for (int x = 0; x < w; ++x) {
        if (!in_window(x, w, bw)) continue;
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const std::complex<double> sv(a_out[i][0], a_out[i][1]);
        const double amp = std::hypot(b_out[i][0], b_out[i][1]);
        const double phase = std::arg(sv);
        a_out[i][0] = amp * std::cos(phase);
        a_out[i][1] = amp * std::sin(phase);
      }
    }
    inv.run();
    float* o = out.data() + c * n;
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) o[i] = static_cast<float>(a_in[i][0] * scale);
  }
  return out;
}

Tensor fda_translate(const Tensor& src, const Tensor& style, const FdaParams& params) {
  Tensor out = fda_translate_unclamped(src, style, params);
  for (float& v : out.flat()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

}  // namespace pixda
