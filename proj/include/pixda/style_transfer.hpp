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
#ifndef PIXDA_STYLE_TRANSFER_HPP_
#define PIXDA_STYLE_TRANSFER_HPP_

#include "pixda/tensor.hpp"

namespace pixda {

struct FdaParams {
  // Half-width of the swapped low-frequency window as a fraction of the image
  // size; the window spans (2 floor(beta H) + 1) x (2 floor(beta W) + 1)
  // centred frequencies.
  double beta = 0.01;

  void validate() const;
};

// Replaces the low-frequency amplitude spectrum of each channel of `src` with
// the one of `style`, keeps the phase of `src`, and clamps the result to
// [0, 1]. Both images are (3, H, W).
Tensor fda_translate(const Tensor& src, const Tensor& style, const FdaParams& params);

// Same transform without the final clamp.
Tensor fda_translate_unclamped(const Tensor& src, const Tensor& style,
                               const FdaParams& params);

// Half-widths (floor(beta H), floor(beta W)) of the window.
std::pair<int, int> fda_window(int height, int width, double beta);

}  // namespace pixda

#endif  // PIXDA_STYLE_TRANSFER_HPP_
