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
#ifndef PIXDA_MODELS_HPP_
#define PIXDA_MODELS_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "pixda/layers.hpp"
#include "pixda/tensor.hpp"

namespace pixda {

struct SegmenterConfig {
  int class_count = 3;
  int base_channels = 16;
  int depth = 3;
  int output_stride = 1;  // 1, 2 or 4

  void validate() const;
};

// Small encoder-decoder standing in for the full segmentation backbone:
//
//   stem 3x3 -> [stride-2 3x3] x downs -> (depth - 1) x 3x3
//            -> [upsample, concat skip, 3x3] x ups -> 1x1 head
//
// downs = max(1, log2(output_stride)), ups = downs - log2(output_stride).
// Every hidden conv is followed by a rectifier.
class Segmenter {
 public:
  explicit Segmenter(const SegmenterConfig& config);

  // Fan-in scaled normal weights, zero biases.
  void initialize(std::mt19937_64& rng);

  // (N, 3, H, W) images in [0, 1] -> (N, C, H / s, W / s) logits.
  Tensor forward(const Tensor& images);
  // Gradient with respect to the images of the last forward().
  Tensor backward(const Tensor& grad_logits, bool param_grads = true);

  std::vector<Parameter*> parameters();
  const SegmenterConfig& config() const { return config_; }

 private:
  struct Stage {
    Conv2d conv;
    LeakyRelu act{0.0f};
  };

  SegmenterConfig config_;
  int downs_ = 1;
  int ups_ = 0;
  std::vector<Stage> stages_;  // stem, downs, body, ups in that order
  Conv2d head_;
  std::vector<int> skip_channels_;
};

// Fully convolutional per-pixel domain classifier: 3x3 (64), 3x3 (128),
// 1x1 (1), stride 1, leaky slope 0.2 between layers. Output resolution equals
// input resolution.
class PixelDiscriminator {
 public:
  explicit PixelDiscriminator(int in_channels);
  void initialize(std::mt19937_64& rng);
  // (N, C, H, W) -> (N, 1, H, W) logits.
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_logits, bool param_grads = true);
  std::vector<Parameter*> parameters();
  Conv2d& last_layer() { return c3_; }

 private:
  Conv2d c1_, c2_, c3_;
  LeakyRelu a1_{0.2f}, a2_{0.2f};
};

// Image-level domain classifier: five 4x4 stride-2 convolutions with
// (64, 128, 256, 512, 1) channels, leaky slope 0.2 between layers, then a
// global average over the final map.
class ImageDiscriminator {
 public:
  static constexpr int kMinInputSize = 32;

  explicit ImageDiscriminator(int in_channels);
  void initialize(std::mt19937_64& rng);
  // (N, C, H, W) -> (N) logits. Throws when H or W < kMinInputSize.
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_logits, bool param_grads = true);
  std::vector<Parameter*> parameters();
  Conv2d& last_layer() { return convs_.back(); }

 private:
  std::vector<Conv2d> convs_;
  std::vector<LeakyRelu> acts_;
  std::vector<int> final_shape_;
};

// (3, H, W) image -> (C, H', W') logits.
Tensor segment(Segmenter& model, const Tensor& image);
// Per-pixel source probability for one probability map.
RealMap pixel_discriminate(PixelDiscriminator& d, const ProbMap& probs);
// Scalar source probability for one probability map.
double image_discriminate(ImageDiscriminator& d, const ProbMap& probs);

// Converts a double ProbMap to a (1, C, H, W) float tensor.
Tensor to_batch(const ProbMap& probs);

void zero_grad(std::span<Parameter* const> params);
// FNV-1a over the raw parameter bytes.
std::uint64_t parameter_hash(std::span<Parameter* const> params);
// Copies values between two parameter lists of identical layout.
void copy_parameters(std::span<Parameter* const> from,
                     std::span<Parameter* const> to);
bool all_grads_zero(std::span<Parameter* const> params);

}  // namespace pixda

#endif  // PIXDA_MODELS_HPP_
