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
#ifndef PIXDA_DATA_HPP_
#define PIXDA_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pixda/tensor.hpp"

namespace pixda {

struct LabeledImage {
  Tensor image;  // (3, H, W) in [0, 1]
  LabelMap labels;
  std::optional<std::string> city;
  std::string id;

  int height() const { return image.dim(1); }
  int width() const { return image.dim(2); }
};

struct DomainShift {
  double hue_shift = 0.0;       // degrees of hue rotation applied to the target
  double noise_sigma = 0.0;     // extra per-pixel noise on the target
  double horizon_offset = 0.0;  // max per-city band displacement, image fraction
};

// Procedural two-domain scene description. Non-rare classes are rendered as
// horizontal bands, rare classes as small compact objects on top of them.
struct ToySceneSpec {
  int class_count = 3;
  std::vector<double> class_frequency_targets{0.7, 0.25, 0.05};
  std::vector<int> rare_object_classes{2};
  DomainShift domain_shift{};
  int height = 32;
  int width = 32;
  std::uint64_t seed = 0;
  // Per-city style spread on the target domain.
  double city_style_jitter = 0.1;
  // Largest per-channel additive colour offset of a target city.
  double colour_cast = 0.0;
  // Per-image style spread on the target domain, on top of the city style.
  double image_style_jitter = 0.0;
  // Fraction of source images rendered with the palette rotated by
  // source_outlier_hue degrees.
  double source_outlier_fraction = 0.0;
  double source_outlier_hue = 180.0;
  // Side of the square rare objects, in pixels.
  int object_size = 4;

  // Throws DataError naming the offending field.
  void validate() const;
};

// Rare objects may cover at most this fraction of the image in expectation.
inline constexpr double kMaxRareCoverage = 0.3;

struct ToyPair {
  std::vector<LabeledImage> source;
  std::vector<LabeledImage> target;
};

// Pure function of (spec, counts): target images carry city tags "city<i>".
ToyPair generate_toy_pair(const ToySceneSpec& spec, int n_source, int n_target,
                          int n_cities);

// Exactly k images per distinct city, uniformly sampled with the given seed.
// Output is grouped by city (sorted by name), original order within a city.
std::vector<LabeledImage> kshot_select(std::span<const LabeledImage> dataset,
                                       int k, std::uint64_t seed);
// Images of `dataset` whose id is not in `taken`.
std::vector<LabeledImage> exclude(std::span<const LabeledImage> dataset,
                                  std::span<const LabeledImage> taken);

// City parsed from a Cityscapes-style stem "city_seq_frame[_suffix]".
std::string city_of_stem(const std::string& stem);
// First three underscore-separated tokens of a file name.
std::string cityscapes_stem(const std::string& filename);

// Pairs every PNG under image_dir with the PNG under label_dir sharing its
// Cityscapes stem. Labels must be single-channel train ids, 255 = ignore.
std::vector<LabeledImage> load_cityscapes_format(
    const std::filesystem::path& image_dir,
    const std::filesystem::path& label_dir);

// On-disk toy dataset: images/, labels/ and meta.json.
struct ToyDataset {
  ToySceneSpec spec;
  int n_cities = 0;
  std::vector<LabeledImage> source;
  std::vector<LabeledImage> target;
};

void write_toy_dataset(const std::filesystem::path& dir, const ToyDataset& data);
ToyDataset read_toy_dataset(const std::filesystem::path& dir);

// Realized per-class pixel frequency over a set of images (ignore excluded).
std::vector<double> class_frequencies(std::span<const LabeledImage> images,
                                      int class_count);

}  // namespace pixda

#endif  // PIXDA_DATA_HPP_
