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
#include "pixda/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace pixda {

std::size_t LabelMap::valid_count() const {
  std::size_t n = 0;
  for (std::int32_t v : values.flat()) n += (v != ignore_index);
  return n;
}

void LabelMap::check_classes(int classes) const {
  for (std::int32_t v : values.flat()) {
    if (v == ignore_index) continue;
    if (v < 0 || v >= classes) {
      throw InvalidArgument("label value " + std::to_string(v) +
                            " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

void throw_shape_mismatch(const std::string& where, const std::vector<int>& a,
                          const std::vector<int>& b) {
  auto str = [](const std::vector<int>& s) {
    std::string r = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) r += ", ";
      r += std::to_string(s[i]);
    }
    return r + ")";
  };
  throw InvalidArgument(where + ": shape mismatch " + str(a) + " vs " +
                        str(b));
}

Tensor softmax_channels(const Tensor& logits) {
  const int n = logits.dim(0), c = logits.dim(1);
  const int hw = logits.dim(2) * logits.dim(3);
  Tensor out(logits.shape());
  for (int i = 0; i < n; ++i) {
    const float* in = logits.slab(i).data();
    float* o = out.slab(i).data();
    for (int p = 0; p < hw; ++p) {
      float m = in[p];
      for (int k = 1; k < c; ++k) m = std::max(m, in[k * hw + p]);
      double z = 0.0;
      for (int k = 0; k < c; ++k) {
        const float e = std::exp(in[k * hw + p] - m);
        o[k * hw + p] = e;
        z += e;
      }
      const float inv = static_cast<float>(1.0 / z);
      for (int k = 0; k < c; ++k) o[k * hw + p] *= inv;
    }
  }
  return out;
}

Tensor softmax_channels_backward(const Tensor& probs, const Tensor& grad) {
  if (!probs.same_shape(grad)) {
    throw_shape_mismatch("softmax_channels_backward", probs.shape(),
                         grad.shape());
  }
  const int n = probs.dim(0), c = probs.dim(1);
  const int hw = probs.dim(2) * probs.dim(3);
  Tensor out(probs.shape());
  for (int i = 0; i < n; ++i) {
    const float* p = probs.slab(i).data();
    const float* g = grad.slab(i).data();
    float* o = out.slab(i).data();
    for (int q = 0; q < hw; ++q) {
      double dot = 0.0;
      for (int k = 0; k < c; ++k) dot += double(p[k * hw + q]) * g[k * hw + q];
      for (int k = 0; k < c; ++k) {
        o[k * hw + q] =
            static_cast<float>(p[k * hw + q] * (g[k * hw + q] - dot));
      }
    }
  }
  return out;
}

ProbMap prob_map_of(const Tensor& probs, int n) {
  const int c = probs.dim(1), h = probs.dim(2), w = probs.dim(3);
  auto src = probs.slab(n);
  ProbMap out{Array<double>({c, h, w})};
  std::copy(src.begin(), src.end(), out.values.data());
  return out;
}

RealMap map_of(const Tensor& t, int n) {
  const int h = t.dim(2), w = t.dim(3);
  auto src = t.slab(n);
  RealMap out({h, w});
  std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(h) * w,
            out.data());
  return out;
}

LabelMap argmax_labels(const Tensor& scores, int n) {
  const int c = scores.dim(1), h = scores.dim(2), w = scores.dim(3);
  const int hw = h * w;
  const float* s = scores.slab(n).data();
  LabelMap out(h, w);
  for (int q = 0; q < hw; ++q) {
    int best = 0;
    for (int k = 1; k < c; ++k) {
      if (s[k * hw + q] > s[best * hw + q]) best = k;
    }
    out.values[static_cast<std::size_t>(q)] = best;
  }
  return out;
}

Tensor stack(std::span<const Tensor* const> items) {
  if (items.empty()) throw InvalidArgument("stack: no tensors");
  const auto& first = items.front()->shape();
  std::vector<int> shape{static_cast<int>(items.size())};
  shape.insert(shape.end(), first.begin(), first.end());
  Tensor out(shape);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i]->shape() != first) {
      throw_shape_mismatch("stack", first, items[i]->shape());
    }
    std::copy(items[i]->flat().begin(), items[i]->flat().end(),
              out.slab(static_cast<int>(i)).begin());
  }
  return out;
}

}  // namespace pixda
