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
#include "pixda/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pixda {
namespace {

int log2_stride(int s) { return s == 4 ? 2 : (s == 2 ? 1 : 0); }

void init_normal(Conv2d& conv, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<float> dist(0.0f, static_cast<float>(stddev));
  for (float& w : conv.weight().value.flat()) w = dist(rng);
  conv.bias().value.fill(0.0f);
}

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

void SegmenterConfig::validate() const {
  if (class_count < 2) throw ConfigError("segmenter class_count must be >= 2");
  if (depth < 2) throw ConfigError("segmenter depth must be >= 2");
  if (base_channels < 1) throw ConfigError("segmenter base_channels must be >= 1");
  if (output_stride != 1 && output_stride != 2 && output_stride != 4) {
    throw ConfigError("segmenter output_stride must be 1, 2 or 4");
  }
}

Segmenter::Segmenter(const SegmenterConfig& config)
    : config_((config.validate(), config)),
      downs_(std::max(1, log2_stride(config.output_stride))),
      ups_(downs_ - log2_stride(config.output_stride)),
      head_("seg.head", 1, 1, 1, 1, 0) {
  const int c = config_.base_channels;
  stages_.reserve(static_cast<std::size_t>(1 + downs_ + config_.depth - 1 + ups_));
  stages_.push_back({Conv2d("seg.stem", 3, c, 3, 1, 1)});
  skip_channels_.push_back(c);
  int width = c;
  for (int j = 1; j <= downs_; ++j) {
    stages_.push_back(
        {Conv2d("seg.down" + std::to_string(j), width, width * 2, 3, 2, 1)});
    width *= 2;
    skip_channels_.push_back(width);
  }
  for (int b = 0; b < config_.depth - 1; ++b) {
    stages_.push_back({Conv2d("seg.body" + std::to_string(b), width, width, 3, 1, 1)});
  }
  for (int u = 1; u <= ups_; ++u) {
    const int skip = skip_channels_[static_cast<std::size_t>(downs_ - u)];
    const int out = c << (downs_ - u);
    stages_.push_back({Conv2d("seg.up" + std::to_string(u), width + skip, out, 3, 1, 1)});
    width = out;
  }
  head_ = Conv2d("seg.head", width, config_.class_count, 1, 1, 0);
}

void Segmenter::initialize(std::mt19937_64& rng) {
  for (auto& s : stages_) {
    const double fan_in = s.conv.in_channels() * s.conv.kernel() * s.conv.kernel();
    init_normal(s.conv, rng, std::sqrt(2.0 / fan_in));
  }
  init_normal(head_, rng, std::sqrt(1.0 / head_.in_channels()));
}

Tensor Segmenter::forward(const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != 3) {
    throw InvalidArgument("segment: expected 3-channel images, got " +
                          images.shape_string());
  }
  const int stride = 1 << downs_;
  if (images.dim(2) % stride != 0 || images.dim(3) % stride != 0) {
    throw InvalidArgument("segment: image size must be divisible by " +
                          std::to_string(stride));
  }
  std::vector<Tensor> skips;
  Tensor x = images;
  std::size_t k = 0;
  for (int j = 0; j <= downs_; ++j, ++k) {
    x = stages_[k].act.forward(stages_[k].conv.forward(x));
    skips.push_back(x);
  }
  for (int b = 0; b < config_.depth - 1; ++b, ++k) {
    x = stages_[k].act.forward(stages_[k].conv.forward(x));
  }
  for (int u = 1; u <= ups_; ++u, ++k) {
    Tensor cat = concat_channels(upsample_nearest(x, 2),
                                 skips[static_cast<std::size_t>(downs_ - u)]);
    x = stages_[k].act.forward(stages_[k].conv.forward(cat));
  }
  return head_.forward(x);
}

Tensor Segmenter::backward(const Tensor& grad_logits, bool param_grads) {
  Tensor g = head_.backward(grad_logits, param_grads);
  std::vector<Tensor> skip_grads(static_cast<std::size_t>(downs_ + 1));
  std::size_t k = stages_.size();
  for (int u = ups_; u >= 1; --u) {
    --k;
    Tensor gcat = stages_[k].conv.backward(stages_[k].act.backward(g), param_grads);
    const int up_channels = stages_[k].conv.in_channels() -
                            skip_channels_[static_cast<std::size_t>(downs_ - u)];
    auto [gup, gskip] = split_channels(gcat, up_channels);
    skip_grads[static_cast<std::size_t>(downs_ - u)] = std::move(gskip);
    g = upsample_nearest_backward(gup, 2);
  }
  for (int b = 0; b < config_.depth - 1; ++b) {
    --k;
    g = stages_[k].conv.backward(stages_[k].act.backward(g), param_grads);
  }
  for (int j = downs_; j >= 0; --j) {
    --k;
    if (!skip_grads[static_cast<std::size_t>(j)].empty()) {
      add_into(g, skip_grads[static_cast<std::size_t>(j)]);
    }
    g = stages_[k].conv.backward(stages_[k].act.backward(g), param_grads);
  }
  return g;
}

std::vector<Parameter*> Segmenter::parameters() {
  std::vector<Parameter*> out;
  for (auto& s : stages_) s.conv.collect(out);
  head_.collect(out);
  return out;
}

PixelDiscriminator::PixelDiscriminator(int in_channels)
    : c1_("pixd.conv1", in_channels, 64, 3, 1, 1),
      c2_("pixd.conv2", 64, 128, 3, 1, 1),
      c3_("pixd.conv3", 128, 1, 1, 1, 0) {}

void PixelDiscriminator::initialize(std::mt19937_64& rng) {
  init_normal(c1_, rng, 0.02);
  init_normal(c2_, rng, 0.02);
  init_normal(c3_, rng, 0.02);
}

Tensor PixelDiscriminator::forward(const Tensor& input) {
  return c3_.forward(a2_.forward(c2_.forward(a1_.forward(c1_.forward(input)))));
}

Tensor PixelDiscriminator::backward(const Tensor& grad_logits, bool param_grads) {
  Tensor g = c3_.backward(grad_logits, param_grads);
  g = c2_.backward(a2_.backward(g), param_grads);
  return c1_.backward(a1_.backward(g), param_grads);
}

std::vector<Parameter*> PixelDiscriminator::parameters() {
  std::vector<Parameter*> out;
  c1_.collect(out);
  c2_.collect(out);
  c3_.collect(out);
  return out;
}

ImageDiscriminator::ImageDiscriminator(int in_channels) {
  const int channels[] = {64, 128, 256, 512, 1};
  int in = in_channels;
  convs_.reserve(5);
  for (int i = 0; i < 5; ++i) {
    convs_.emplace_back("imgd.conv" + std::to_string(i + 1), in, channels[i], 4, 2, 1);
    in = channels[i];
  }
  acts_.assign(4, LeakyRelu(0.2f));
}

void ImageDiscriminator::initialize(std::mt19937_64& rng) {
  for (auto& c : convs_) init_normal(c, rng, 0.02);
}

Tensor ImageDiscriminator::forward(const Tensor& input) {
  if (input.rank() != 4 || input.dim(2) < kMinInputSize ||
      input.dim(3) < kMinInputSize) {
    throw InvalidArgument(
        "image discriminator: input spatial size must be at least " +
        std::to_string(kMinInputSize) + "x" + std::to_string(kMinInputSize) +
        ", got " + input.shape_string());
  }
  Tensor x = input;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    x = convs_[i].forward(x);
    if (i < acts_.size()) x = acts_[i].forward(x);
  }
  final_shape_ = x.shape();
  const int n = x.dim(0);
  const std::size_t plane = x.size() / static_cast<std::size_t>(n);
  Tensor logits({n});
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (float v : x.slab(i)) s += v;
    logits[static_cast<std::size_t>(i)] = static_cast<float>(s / static_cast<double>(plane));
  }
  return logits;
}

Tensor ImageDiscriminator::backward(const Tensor& grad_logits, bool param_grads) {
  Tensor g(final_shape_);
  const int n = final_shape_.at(0);
  const std::size_t plane = g.size() / static_cast<std::size_t>(n);
  for (int i = 0; i < n; ++i) {
    const float v = grad_logits[static_cast<std::size_t>(i)] / static_cast<float>(plane);
    for (float& e : g.slab(i)) e = v;
  }
  for (std::size_t i = convs_.size(); i-- > 0;) {
    if (i < acts_.size()) g = acts_[i].backward(g);
    g = convs_[i].backward(g, param_grads);
  }
  return g;
}

std::vector<Parameter*> ImageDiscriminator::parameters() {
  std::vector<Parameter*> out;
  for (auto& c : convs_) c.collect(out);
  return out;
}

Tensor segment(Segmenter& model, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw InvalidArgument("segment: expected a (3, H, W) image, got " +
                          image.shape_string());
  }
  std::vector<int> shape{1};
  shape.insert(shape.end(), image.shape().begin(), image.shape().end());
  Tensor logits = model.forward(Tensor(shape, image.storage()));
  std::vector<int> out_shape(logits.shape().begin() + 1, logits.shape().end());
  return Tensor(out_shape, logits.storage());
}

Tensor to_batch(const ProbMap& probs) {
  Tensor t({1, probs.classes(), probs.height(), probs.width()});
  std::copy(probs.values.flat().begin(), probs.values.flat().end(), t.data());
  return t;
}

RealMap pixel_discriminate(PixelDiscriminator& d, const ProbMap& probs) {
  const Tensor logits = d.forward(to_batch(probs));
  RealMap out({probs.height(), probs.width()});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(logits[i]);
  return out;
}

double image_discriminate(ImageDiscriminator& d, const ProbMap& probs) {
  return sigmoid(d.forward(to_batch(probs))[0]);
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->grad.fill(0.0f);
}

std::uint64_t parameter_hash(std::span<Parameter* const> params) {
  std::uint64_t h = 1469598103934665603ull;
  for (const Parameter* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    const std::size_t n = p->value.size() * sizeof(float);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

void copy_parameters(std::span<Parameter* const> from,
                     std::span<Parameter* const> to) {
  if (from.size() != to.size()) {
    throw InvalidArgument("copy_parameters: parameter lists differ in length");
  }
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (!from[i]->value.same_shape(to[i]->value)) {
      throw_shape_mismatch("copy_parameters " + from[i]->name,
                           from[i]->value.shape(), to[i]->value.shape());
    }
    to[i]->value = from[i]->value;
  }
}

bool all_grads_zero(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    for (float g : p->grad.flat()) {
      if (g != 0.0f) return false;
    }
  }
  return true;
}

}  // namespace pixda
