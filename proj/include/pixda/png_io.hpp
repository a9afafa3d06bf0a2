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
#ifndef PIXDA_PNG_IO_HPP_
#define PIXDA_PNG_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace pixda {

// 8-bit interleaved pixels.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> pixels;
};

// Reads a PNG keeping its native channel layout for gray/RGB files; RGBA and
// gray+alpha files have their alpha dropped. Palette files are expanded to RGB.
// Throws DataError on any decode failure.
PngImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const PngImage& image);

}  // namespace pixda

#endif  // PIXDA_PNG_IO_HPP_
